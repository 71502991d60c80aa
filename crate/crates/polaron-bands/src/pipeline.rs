//! Stage orchestration: each stage is loaded from the cache when a
//! matching entry exists and computed (then cached) otherwise.

use std::collections::BTreeMap;
use std::time::Instant;

use polaron_core::band_calculator::{sweep, BandDiagram, BandInputs, SweepSpec};
use polaron_core::bogoliubov_ladder::{
    mode_energies, physical_ladder, zero_point_energy, ExcitationLadder,
};
use polaron_core::hessian_spectrum::{assemble_spectrum, prepare_context, HessianSpectrum};
use polaron_core::pekar_solver::{solve_pekar, PekarSolution};
use polaron_core::Exec;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::cache::{Cache, Lookup};
use crate::config::{content_hash, Config};
use crate::error::CliError;
use crate::notice;

pub const STAGE_PEKAR: &str = "pekar";
pub const STAGE_HESSIAN: &str = "hessian";

pub struct Pipeline<'a> {
    pub cfg: &'a Config,
    pub exec: Exec,
    cache: Cache,
    /// Wall-clock seconds per stage, including cache loads.
    pub timings: BTreeMap<String, f64>,
    /// Whether each cached stage was loaded rather than computed.
    pub cache_hits: BTreeMap<String, bool>,
    pekar: Option<PekarSolution>,
    spectrum: Option<HessianSpectrum>,
}

impl<'a> Pipeline<'a> {
    pub fn new(cfg: &'a Config, cache: Cache, exec: Exec) -> Self {
        Pipeline {
            cfg,
            exec,
            cache,
            timings: BTreeMap::new(),
            cache_hits: BTreeMap::new(),
            pekar: None,
            spectrum: None,
        }
    }

    pub fn cache(&self) -> &Cache {
        &self.cache
    }

    /// Cache key of the Pekar stage.
    pub fn pekar_key(&self) -> String {
        content_hash(&(
            STAGE_PEKAR,
            polaron_core::VERSION,
            self.cfg.numerics.pekar(),
        ))
    }

    /// Cache key of the Hessian stage (it re-solves the electron problem
    /// on its own grid from the Pekar knobs).
    pub fn hessian_key(&self) -> String {
        content_hash(&(
            STAGE_HESSIAN,
            polaron_core::VERSION,
            self.cfg.numerics.pekar(),
            self.cfg.numerics.hessian(),
        ))
    }

    fn cached<T, F>(&mut self, stage: &str, key: &str, compute: F) -> Result<T, CliError>
    where
        T: Serialize + DeserializeOwned,
        F: FnOnce(&Self) -> Result<T, CliError>,
    {
        let t = Instant::now();
        let value = match self.cache.load::<T>(stage, key)? {
            Lookup::Hit(v) => {
                self.cache_hits.insert(stage.into(), true);
                v
            }
            other => {
                if let Lookup::Stale(msg) = other {
                    notice(&msg);
                }
                let v = compute(self)?;
                self.cache.store(stage, key, &v)?;
                self.cache_hits.insert(stage.into(), false);
                v
            }
        };
        self.timings.insert(stage.into(), t.elapsed().as_secs_f64());
        Ok(value)
    }

    pub fn pekar(&mut self) -> Result<&PekarSolution, CliError> {
        if self.pekar.is_none() {
            let key = self.pekar_key();
            let cfg = self.cfg.numerics.pekar();
            let sol = self.cached(STAGE_PEKAR, &key, |_| Ok(solve_pekar(&cfg)?))?;
            self.pekar = Some(sol);
        }
        Ok(self.pekar.as_ref().expect("just set"))
    }

    pub fn spectrum(&mut self) -> Result<&HessianSpectrum, CliError> {
        if self.spectrum.is_none() {
            let key = self.hessian_key();
            let base = self.cfg.numerics.pekar();
            let hcfg = self.cfg.numerics.hessian();
            let spec = self.cached(STAGE_HESSIAN, &key, |p| {
                let ctx = prepare_context(&base, &hcfg, hcfg.k_max_proxy)?;
                Ok(assemble_spectrum(&ctx, &hcfg, p.exec)?)
            })?;
            self.spectrum = Some(spec);
        }
        Ok(self.spectrum.as_ref().expect("just set"))
    }

    pub fn ladder(&mut self) -> Result<ExcitationLadder, CliError> {
        let n = self.cfg.physics.ladder_size;
        let t = Instant::now();
        let ladder = physical_ladder(self.spectrum()?, n)?;
        self.timings
            .insert("ladder".into(), t.elapsed().as_secs_f64());
        Ok(ladder)
    }

    pub fn band_inputs(&mut self) -> Result<BandInputs, CliError> {
        let ladder = self.ladder()?;
        let (e_pek, m_lp) = {
            let p = self.pekar()?;
            (p.e_pek, p.m_lp)
        };
        let tail_rel = self.cfg.numerics.tolerances.tail_rel;
        let spec = self.spectrum()?;
        let zp = zero_point_energy(spec, tail_rel)?;
        Ok(BandInputs {
            e_pek,
            m_lp,
            zpe: zp.zpe,
            ladder: ladder.energies(),
            sqrt_lambda: mode_energies(spec, spec.modes.len()),
        })
    }

    pub fn diagram(&mut self, inputs: &BandInputs) -> Result<BandDiagram, CliError> {
        let phys = &self.cfg.physics;
        let spec = SweepSpec {
            alphas: phys.alpha_list.clone(),
            momenta: phys.momenta(),
            n_bands: phys.n_bands,
            c_err: phys.c_err,
        };
        let t = Instant::now();
        let d = sweep(inputs, &spec, self.exec)?;
        self.timings
            .insert("bands".into(), t.elapsed().as_secs_f64());
        Ok(d)
    }
}
