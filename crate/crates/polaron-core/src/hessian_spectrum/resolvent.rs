//! Reduced resolvent `R = Q_ψ (h_pek)^{-1} Q_ψ` in one electron sector.

use super::HessianContext;
use crate::error::{PolaronError, Result};
use crate::pekar_solver::{lowest_eigenpair, PekarSolution};
use crate::radial_numerics::{radial_operator, PentaLdl, RadialFn, SymPenta};

/// Largest accepted pivot ratio of the banded factorization.
const MAX_CONDITION: f64 = 1e12;

/// Factorized reduced resolvent in sector `ℓ`, acting on reduced radial
/// functions `u = r·f`.
///
/// For `ℓ = 0` the operator is singular on `u_ψ`; the solve projects the
/// source off `u_ψ`, pins the unknown at the maximum of `u_ψ` (which
/// selects one solution of the consistent singular system) and projects
/// the result again. For `ℓ ≥ 1` the operator is positive definite.
#[derive(Debug, Clone)]
pub struct ReducedResolvent {
    ell: usize,
    h: f64,
    op: SymPenta,
    fac: PentaLdl,
    ground: Option<Vec<f64>>,
    pin: usize,
}

impl ReducedResolvent {
    /// Builds the resolvent from the potential, the discrete ground state
    /// `u` (`h Σ u² = 1`) and its eigenvalue.
    pub(crate) fn new(
        potential: &[f64],
        h: f64,
        u: &[f64],
        lambda: f64,
        ell: usize,
    ) -> Result<Self> {
        let op = radial_operator(h, ell, potential).shifted(lambda);
        let pin = u
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let (fac, ground) = if ell == 0 {
            let mut pinned = op.clone();
            pinned.pin(pin);
            (pinned.factor()?, Some(u.to_vec()))
        } else {
            (op.factor()?, None)
        };
        let (lo, hi) = fac.pivot_range();
        if !(lo > 0.0) || hi / lo > MAX_CONDITION {
            return Err(PolaronError::Numerical(format!(
                "reduced resolvent in sector {ell} is ill-conditioned (pivot ratio {:.3e}); \
                 change the radial grid",
                hi / lo
            )));
        }
        Ok(ReducedResolvent {
            ell,
            h,
            op,
            fac,
            ground,
            pin,
        })
    }

    pub(crate) fn for_context(ctx: &HessianContext, ell: usize) -> Result<Self> {
        Self::new(
            &ctx.electron.potential,
            ctx.electron.grid.spacing(),
            &ctx.u,
            ctx.lambda,
            ell,
        )
    }

    /// Builds the resolvent directly from a Pekar solution.
    pub fn from_pekar(pekar: &PekarSolution, ell: usize) -> Result<Self> {
        let h = pekar.grid.spacing();
        let op = radial_operator(h, 0, &pekar.potential.values);
        let (lambda, u) = lowest_eigenpair(&op, h, 200)?;
        Self::new(&pekar.potential.values, h, &u, lambda, ell)
    }

    /// Sector label.
    pub fn ell(&self) -> usize {
        self.ell
    }

    fn project(&self, v: &mut [f64]) {
        if let Some(g) = &self.ground {
            let c: f64 = g.iter().zip(v.iter()).map(|(a, b)| a * b).sum::<f64>() * self.h;
            v.iter_mut().zip(g).for_each(|(x, g)| *x -= c * g);
        }
    }

    /// Replaces the reduced source `s` by `R s` (no residual check).
    pub fn apply_in_place(&self, s: &mut [f64]) {
        self.project(s);
        if self.ground.is_some() {
            s[self.pin] = 0.0;
        }
        self.fac.solve_in_place(s);
        self.project(s);
    }

    /// `R s` with the residual `‖h_pek x − Q s‖` (in the `L²(dr)` norm).
    pub fn apply_checked(&self, s: &[f64]) -> (Vec<f64>, f64) {
        let mut qs = s.to_vec();
        self.project(&mut qs);
        let mut x = s.to_vec();
        self.apply_in_place(&mut x);
        let mut hx = vec![0.0; x.len()];
        self.op.apply(&x, &mut hx);
        let res = hx
            .iter()
            .zip(&qs)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()
            * self.h.sqrt();
        (x, res)
    }
}

/// Applies the reduced resolvent in electron sector `L` to a radial
/// function `f` (the angular factor is implicit).
///
/// Fails if `‖h_pek x − Q s‖ ≥ 1e-9·max(1, ‖Q s‖)`.
pub fn reduced_resolvent_apply(
    pekar: &PekarSolution,
    ell: usize,
    source: &RadialFn,
) -> Result<RadialFn> {
    if source.ell != ell {
        return Err(PolaronError::Sector(format!(
            "source has angular momentum {} but sector {ell} was requested",
            source.ell
        )));
    }
    let grid = &pekar.grid;
    if source.values.len() != grid.len() {
        return Err(PolaronError::Precondition(
            "source is not on the electron grid".into(),
        ));
    }
    let res = ReducedResolvent::from_pekar(pekar, ell)?;
    let u: Vec<f64> = source
        .values
        .iter()
        .zip(&grid.nodes)
        .map(|(f, r)| f * r)
        .collect();
    let qs_norm = {
        let mut q = u.clone();
        res.project(&mut q);
        q.iter().map(|x| x * x).sum::<f64>().sqrt() * grid.spacing().sqrt()
    };
    let (x, residual) = res.apply_checked(&u);
    if residual >= 1e-9 * qs_norm.max(1.0) {
        return Err(PolaronError::Numerical(format!(
            "reduced resolvent residual {residual:.3e} in sector {ell}; refine the radial grid"
        )));
    }
    Ok(RadialFn {
        values: x.iter().zip(&grid.nodes).map(|(x, r)| x / r).collect(),
        ell,
    })
}
