//! Pass/fail evaluation of the sweep invariants.

use abspec_core::asymptotics::{decreasing_with_exceptions, relative_change, LimitConstant, LimitProfile, SweepReport};
use abspec_core::spectral::fmt12;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, pass: bool, detail: String) -> Check {
        Check { name, pass, detail }
    }

    pub fn line(&self) -> String {
        format!("{} {}: {}", if self.pass { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

/// Limit-profile diagnostics computed alongside a sweep.
#[derive(Debug, Clone)]
pub struct ProfileSummary {
    pub profile: LimitProfile,
    pub limit: LimitConstant,
    /// Relative energy difference on D_2 against the profile at 2S.
    pub doubling: f64,
    /// Predicted limit of |a|^order / sqrt(H(phi_a, K|a|)).
    pub predicted_h_ratio: f64,
}

pub const SLACK: f64 = 0.05;
pub const PARSEVAL_TOL: f64 = 1e-8;
/// Frequency-bound window: samples with |a| up to this value.
pub const FREQUENCY_WINDOW: f64 = 0.05;

pub fn sweep_checks(rep: &SweepReport, prof: Option<&ProfileSummary>) -> Vec<Check> {
    let mut out = Vec::new();
    let order = rep.order;
    let floor = 1.0 + (2.0 * order).floor() - 0.2;
    match &rep.fit {
        Some(f) => out.push(Check::new(
            "rate floor",
            f.slope >= floor,
            format!("slope {} (r2 {}) >= {}; dropped {}", fmt12(f.slope), fmt12(f.r2), fmt12(floor), f.dropped.len()),
        )),
        None => out.push(Check::new("rate floor", false, "fewer than 4 usable samples".into())),
    }
    match rep.quotient_spread {
        Some(q) => out.push(Check::new("quotient bounded", q.is_finite(), format!("max/min of |diff|/|a|^{} = {}", fmt12(2.0 * order), fmt12(q)))),
        None => out.push(Check::new("quotient bounded", false, "fewer than 4 usable samples".into())),
    }

    let n0 = rep.n0;
    let min_gap = std::iter::once(&rep.reference)
        .chain(rep.samples.iter().map(|s| &s.solution))
        .map(|s| {
            let l = &s.lambdas;
            let lam = l[n0 - 1];
            let below = if n0 >= 2 { lam - l[n0 - 2] } else { f64::INFINITY };
            let above = if n0 < l.len() { l[n0] - lam } else { f64::INFINITY };
            below.min(above) / lam
        })
        .fold(f64::INFINITY, f64::min);
    out.push(Check::new("simplicity", min_gap > 1e-3, format!("smallest relative gap {}", fmt12(min_gap))));

    let n = rep.samples.len();
    let hr: Vec<f64> = rep.samples.iter().map(|s| s.h_ratio).collect();
    if n >= 2 {
        let ch = relative_change(hr[n - 1], hr[n - 2]);
        out.push(Check::new("H-ratio convergence", ch < 0.1, format!("last-two change {}", fmt12(ch))));
    }
    if let Some(p) = prof {
        let d = relative_change(hr[n - 1], p.predicted_h_ratio);
        out.push(Check::new(
            "H-ratio limit",
            d < 0.2,
            format!("{} vs profile prediction {} (rel {})", fmt12(hr[n - 1]), fmt12(p.predicted_h_ratio), fmt12(d)),
        ));
    }

    let wd: Vec<f64> = rep.samples.iter().map(|s| s.reference_blowup).collect();
    out.push(Check::new(
        "rescaled reference convergence",
        decreasing_with_exceptions(&wd, 1),
        format!("distances {}", join(&wd)),
    ));

    if let Some(p) = prof {
        let bd: Vec<f64> = rep.samples.iter().filter_map(|s| s.blowup.map(|b| b.distance)).collect();
        out.push(Check::new("blow-up monotone", decreasing_with_exceptions(&bd, 1), format!("distances {}", join(&bd))));
        let last = rep.samples[n - 1].blowup.expect("profile given");
        out.push(Check::new("blow-up final", last.distance < 0.1, format!("{} < 0.1", fmt12(last.distance))));
        let beta = rep.reference.beta(rep.k);
        let dc = (last.c - beta).norm() / beta.norm();
        out.push(Check::new(
            "blow-up constant",
            dc < 0.2,
            format!("c = {} vs beta = {} (rel {})", fmt12(last.c.norm()), fmt12(beta.norm()), fmt12(dc)),
        ));
        out.push(Check::new("profile doubling", p.doubling < 0.05, format!("self-error on D_2 {}", fmt12(p.doubling))));
        out.push(Check::new(
            "profile far field",
            p.profile.far_field_defect < 0.05,
            format!("|Psi - data| / |psi_k| on |x| = S/2: {}", fmt12(p.profile.far_field_defect)),
        ));
        let l = &p.limit;
        out.push(Check::new(
            "limit constant positive",
            l.l > 0.0 && l.tail_margin_ok(),
            format!("L = {} > 10 * tail {}", fmt12(l.l), fmt12(l.tail)),
        ));
        let gaps: Vec<f64> = rep.samples.iter().map(|s| s.gap).collect();
        if n >= 2 {
            let ch = relative_change(gaps[n - 1], gaps[n - 2]);
            out.push(Check::new("gap stabilizes", ch < 0.5, format!("last-two change {}", fmt12(ch))));
        }
        let target = beta.norm_sqr() * l.l;
        let ratio = gaps[n - 1] / target;
        out.push(Check::new(
            "gap limit",
            (0.5..=2.0).contains(&ratio),
            format!("gap {} vs |beta|^2 L = {} (ratio {})", fmt12(gaps[n - 1]), fmt12(target), fmt12(ratio)),
        ));
    }

    let worst_order = rep.samples.iter().map(|s| s.solution.order.order).fold(0.0, f64::max);
    out.push(Check::new(
        "vanishing order stability",
        worst_order <= order + 0.05,
        format!("max order at a {} <= {} + 0.05", fmt12(worst_order), fmt12(order)),
    ));

    let mut nmax = f64::NEG_INFINITY;
    let mut any = false;
    for s in rep.samples.iter().filter(|s| s.abs_a <= FREQUENCY_WINDOW * (1.0 + 1e-12)) {
        for (r, v) in s.solution.frequency.radii.iter().zip(&s.solution.frequency.n) {
            if *r >= 4.0 * s.abs_a * (1.0 - 1e-12) && *r <= 0.3 * (1.0 + 1e-12) {
                nmax = nmax.max(*v);
                any = true;
            }
        }
    }
    if any {
        out.push(Check::new(
            "frequency bound",
            nmax <= order + 0.1,
            format!("max N {} <= {}", fmt12(nmax), fmt12(order + 0.1)),
        ));
    }

    let sols: Vec<_> = std::iter::once(&rep.reference).chain(rep.samples.iter().map(|s| &s.solution)).collect();
    let hardy = sols.iter().map(|s| s.inequality.hardy_ratio).fold(0.0, f64::max);
    let poinc = sols.iter().map(|s| s.inequality.poincare_ratio).fold(0.0, f64::max);
    out.push(Check::new(
        "Hardy and Poincare",
        sols.iter().all(|s| s.inequality.holds(SLACK)),
        format!("max ratios {} and {} <= {}", fmt12(hardy), fmt12(poinc), fmt12(1.0 + SLACK)),
    ));
    let pd = sols.iter().map(|s| s.parseval_defect).fold(0.0, f64::max);
    out.push(Check::new("Parseval", pd <= PARSEVAL_TOL, format!("max defect {}", fmt12(pd))));
    out.push(Check::new(
        "H positive",
        sols.iter().all(|s| s.frequency.h_positive()),
        format!("{} curves", sols.len()),
    ));
    out.push(Check::new(
        "perturbed frequency monotone",
        sols.iter().all(|s| s.perturbed_monotone),
        "5% slack".into(),
    ));
    out
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| fmt12(*x)).collect::<Vec<_>>().join(" ")
}
