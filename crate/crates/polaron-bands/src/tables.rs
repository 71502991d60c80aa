//! CSV layouts of the emitted tables. Rows are ordered
//! lexicographically on the leading key columns.

use polaron_core::band_calculator::{
    band_upper, critical_momentum, essential_edge, BandDiagram, BandInputs,
};
use polaron_core::bogoliubov_ladder::ExcitationLadder;
use polaron_core::hessian_spectrum::HessianSpectrum;
use polaron_core::pekar_solver::PekarSolution;

use crate::emit::{fmt_e, Provenance, Table};
use crate::error::CliError;

const UNITS: &str = "units: energies in units of the Pekar functional E(u) = int |grad u|^2 - (1/4pi) int int |u|^2|u|^2/|x-y|; \
     momenta in the same length units";

pub fn pekar_table(prov: &Provenance, sol: &PekarSolution) -> Table {
    let mut t = Table::new("pekar.csv", prov, &["r", "psi", "phi", "potential"]);
    t.comment(UNITS);
    t.comment(format!(
        "e_pek = {}; lambda_pek = {}; m_lp = {}",
        fmt_e(sol.e_pek),
        fmt_e(sol.lambda_pek),
        fmt_e(sol.m_lp)
    ));
    for (((r, psi), phi), v) in sol
        .grid
        .nodes
        .iter()
        .zip(&sol.psi.values)
        .zip(&sol.phi.values)
        .zip(&sol.potential.values)
    {
        t.row(vec![fmt_e(*r), fmt_e(*psi), fmt_e(*phi), fmt_e(*v)]);
    }
    t
}

/// Every computed eigenvalue of every sector; `ℓ = 1` lists the
/// spectrum after removal of the translation zero modes.
pub fn spectrum_table(prov: &Provenance, spec: &HessianSpectrum) -> Table {
    let mut t = Table::new(
        "spectrum.csv",
        prov,
        &["ell", "index", "lambda", "multiplicity", "K"],
    );
    t.comment(
        "eigenvalues of H_K = 1 - 4T_K per field angular momentum sector ell (each (2ell+1)-fold)",
    );
    t.comment(format!(
        "ell = 1 deflated: translation zero mode removed (eigenvalue before removal {})",
        fmt_e(spec.zero_mode.eigenvalue)
    ));
    t.comment(format!(
        "beta = {}; frak_m = {}; ZPE = {}",
        fmt_e(spec.beta),
        spec.frak_m,
        fmt_e(spec.zpe_full)
    ));
    for s in &spec.sectors {
        for (i, l) in s.eigenvalues.iter().enumerate() {
            t.row(vec![
                s.ell.to_string(),
                i.to_string(),
                fmt_e(*l),
                (2 * s.ell + 1).to_string(),
                fmt_e(s.cutoff),
            ]);
        }
    }
    t
}

/// Ladder rows `n, Λ⁽ⁿ⁾, multiset`; the multiset lists 1-based positions
/// in the ascending mode list (with multiplicity), space separated.
pub fn ladder_table(prov: &Provenance, ladder: &ExcitationLadder) -> Table {
    let mut t = Table::new("ladder.csv", prov, &["n", "Lambda", "multiset"]);
    t.comment("Lambda = sum of sqrt(lambda_j) over the multiset; modes numbered 1.. in ascending order with multiplicity");
    t.comment(format!(
        "cap = {}; frak_m = {}",
        fmt_e(ladder.cap),
        ladder.frak_m
    ));
    for (n, e) in ladder.entries.iter().enumerate() {
        let ms: Vec<String> = e.modes.iter().map(|m| m.to_string()).collect();
        t.row(vec![n.to_string(), fmt_e(e.energy), ms.join(" ")]);
    }
    t
}

pub fn bands_table(prov: &Provenance, d: &BandDiagram) -> Table {
    let mut t = Table::new(
        "bands.csv",
        prov,
        &[
            "alpha",
            "P",
            "n",
            "band_upper",
            "edge_lower",
            "edge_upper",
            "is_bound",
            "count_ladder",
            "count_sqrt",
        ],
    );
    t.comment(UNITS);
    t.comment("band_upper = e_pek + (ZPE + Lambda_n)/alpha^2 + P^2/(2 alpha^4 m_lp); is_bound = band_upper < edge_lower");
    t.comment(format!("counting: {}", d.criterion));
    for r in &d.rows {
        t.row(vec![
            fmt_e(r.alpha),
            fmt_e(r.p),
            r.n.to_string(),
            fmt_e(r.band_upper),
            fmt_e(r.edge_lower),
            fmt_e(r.edge_upper),
            r.is_bound.to_string(),
            r.count_ladder.to_string(),
            r.count_sqrt.to_string(),
        ]);
    }
    t
}

/// Plot data: for every `α` and band `n`, the curve on `points` equally
/// spaced momenta in `[0, p_max_over_pc·P_c]`, with the edge bracket and
/// `P_c` repeated on each row.
pub fn figure_table(
    prov: &Provenance,
    inputs: &BandInputs,
    alphas: &[f64],
    n_bands: usize,
    points: usize,
    p_max_over_pc: f64,
) -> Result<Table, CliError> {
    let mut t = Table::new(
        "figure1_data.csv",
        prov,
        &[
            "alpha",
            "n",
            "P",
            "P_over_Pc",
            "band_upper",
            "edge_lower",
            "edge_upper",
            "P_c",
        ],
    );
    t.comment(UNITS);
    t.comment("one parabola per (alpha, n); edge_lower/edge_upper bracket the essential spectrum; P_c = sqrt(2 m_lp) alpha");
    for &alpha in alphas {
        let pc = critical_momentum(inputs.m_lp, alpha);
        let (lo, hi) = essential_edge(inputs, alpha)?;
        for n in 0..n_bands {
            for i in 0..points {
                let f = p_max_over_pc * i as f64 / (points - 1) as f64;
                let p = f * pc;
                t.row(vec![
                    fmt_e(alpha),
                    n.to_string(),
                    fmt_e(p),
                    fmt_e(f),
                    fmt_e(band_upper(inputs, n, alpha, p)?),
                    fmt_e(lo),
                    fmt_e(hi),
                    fmt_e(pc),
                ]);
            }
        }
    }
    Ok(t)
}
