use std::path::{Path, PathBuf};

use yamabe_core::ground_state::shoot;
use yamabe_core::profile_io::{cache_key, load_profile, save_profile_atomic};
use yamabe_core::{make_dims, Equation, Profile, Shooting};

/// Ground-state profiles, optionally backed by a directory of cache files.
#[derive(Debug, Clone)]
pub struct ProfileCache {
    dir: Option<PathBuf>,
}

impl ProfileCache {
    pub fn new(dir: Option<PathBuf>) -> Self {
        Self { dir }
    }

    fn path(&self, m: u32, n: u32, equation: Equation, settings: &Shooting) -> Option<PathBuf> {
        self.dir
            .as_deref()
            .map(|d| d.join(cache_key(m, n, equation, settings)))
    }

    /// Loads a cached profile or shoots and stores a fresh one. Unreadable
    /// cache files are recomputed; failures to write the cache are ignored.
    pub fn get(
        &self,
        m: u32,
        n: u32,
        equation: Equation,
        settings: &Shooting,
    ) -> yamabe_core::Result<Profile> {
        let dims = make_dims::<f64>(m, n)?;
        let path = self.path(m, n, equation, settings);
        if let Some(profile) = path.as_deref().and_then(|p| try_load(p, &dims, equation)) {
            return Ok(profile);
        }
        let profile = shoot(&dims, equation, settings)?;
        if let Some(p) = &path {
            let _ = save_profile_atomic(&profile, p);
        }
        Ok(profile)
    }
}

fn try_load(path: &Path, dims: &yamabe_core::Dims, equation: Equation) -> Option<Profile> {
    if !path.exists() {
        return None;
    }
    let profile = load_profile::<f64>(path).ok()?;
    (profile.dims == *dims && profile.equation == equation).then_some(profile)
}
