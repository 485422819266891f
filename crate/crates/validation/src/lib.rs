//! Pass/fail criteria over the analytic check suite and the desk-scale
//! experiment results.
//!
//! Every function here is a pure reading of results that were already
//! produced, so the thresholds can be audited without rerunning anything.

use ppc_core::experiments::{AggregateRow, EpisodeLog, RateFit};
use ppc_core::theory::SuiteEntry;

/// Mean-safety slack allowed between consecutive sample budgets.
pub const MONOTONE_SLACK: f64 = 0.02;
/// Solver tolerance added to the displacement bound.
pub const DISPLACEMENT_TOL: f64 = 1e-3;
/// Wall-clock budget for all six desk experiments.
pub const DESK_BUDGET_SECS: f64 = 600.0;

/// One acceptance criterion and the numbers it was decided on.
#[derive(Debug, Clone, PartialEq)]
pub struct Criterion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Criterion {
    pub fn new(name: &str, passed: bool, detail: String) -> Self {
        Self { name: name.to_string(), passed, detail }
    }

    pub fn line(&self) -> String {
        let status = if self.passed { "PASS" } else { "FAIL" };
        format!("{status} {:<30} {}", self.name, self.detail)
    }
}

/// Every entry of `check` must be ok, and there must be at least one.
fn suite_group(entries: &[SuiteEntry], name: &str, check: &str, extra: impl Fn(&SuiteEntry) -> bool) -> Criterion {
    let group: Vec<&SuiteEntry> = entries.iter().filter(|e| e.check == check).collect();
    let ok = group.iter().filter(|e| e.ok() && extra(e)).count();
    let worst = group
        .iter()
        .filter_map(|e| e.outcome.as_ref().ok())
        .map(|r| r.worst_violation - r.tolerance)
        .fold(f64::NEG_INFINITY, f64::max);
    let rejections = group.iter().filter(|e| e.expect_rejection).count();
    Criterion::new(
        name,
        !group.is_empty() && ok == group.len(),
        format!("{ok}/{} entries ok, {rejections} expected rejections, max(worst - tol) = {worst:.3e}", group.len()),
    )
}

fn probes_at_least(n: usize) -> impl Fn(&SuiteEntry) -> bool {
    move |e| e.outcome.as_ref().is_ok_and(|r| r.probes >= n)
}

/// One criterion per analytic check.
pub fn analytic_criteria(entries: &[SuiteEntry]) -> Vec<Criterion> {
    let any = |_: &SuiteEntry| true;
    vec![
        suite_group(entries, "kde_score_vs_fd", "kde_score", probes_at_least(50 * 1000)),
        suite_group(entries, "fisher_vs_fd_hessian", "kde_fisher", any),
        suite_group(entries, "single_gaussian_closed_forms", "single_gaussian", any),
        suite_group(entries, "gibbs_map_cell_exact", "gibbs_map", |e| {
            e.outcome.as_ref().is_ok_and(|r| r.probes >= 401 * 401)
        }),
        suite_group(entries, "mixture_hessian", "mixture_hessian", |e| {
            e.outcome.as_ref().is_ok_and(|r| r.get("mixtures") == Some(20.0))
        }),
        suite_group(entries, "landscape", "landscape", any),
        suite_group(entries, "contraction", "contraction", any),
        suite_group(entries, "critical_stiffness", "critical_stiffness", any),
        suite_group(entries, "comparator_sensitivity", "comparator_sensitivity", any),
        suite_group(entries, "level_set_stability", "level_set_stability", any),
        suite_group(entries, "ctx_gap", "ctx_gap", any),
    ]
}

fn find<'a>(rows: &'a [AggregateRow], controller: &str, value: &str) -> Option<&'a AggregateRow> {
    rows.iter().find(|a| a.controller == controller && a.value == value)
}

fn safety(rows: &[AggregateRow], controller: &str, value: &str) -> f64 {
    find(rows, controller, value).map_or(f64::NAN, |a| a.safety_mean)
}

fn cost(rows: &[AggregateRow], controller: &str, value: &str) -> f64 {
    find(rows, controller, value).map_or(f64::NAN, |a| a.cost_mean)
}

fn value_label(v: f64) -> String {
    v.to_string()
}

/// Main comparison: static conservative ≥ PPC ≥ CEM in safety, PPC safety
/// at least 0.90 and PPC cost below the oracle's.
pub fn exp1_ordering(rows: &[AggregateRow]) -> Criterion {
    let (st, ppc, cem) = (safety(rows, "static_conservative", ""), safety(rows, "ppc", ""), safety(rows, "cem", ""));
    let c = cost(rows, "ppc", "");
    let parts = [
        (st >= ppc, format!("static {st:.3} >= ppc {ppc:.3}")),
        (ppc >= cem, format!("ppc {ppc:.3} >= cem {cem:.3}")),
        (ppc >= 0.90, format!("ppc {ppc:.3} >= 0.90")),
        (c < 1.0, format!("ppc cost {c:.3} < 1")),
    ];
    combine("exp1_ordering", &parts)
}

fn combine(name: &str, parts: &[(bool, String)]) -> Criterion {
    let detail: Vec<String> =
        parts.iter().map(|(ok, text)| format!("{}{text}", if *ok { "" } else { "NOT " })).collect();
    Criterion::new(name, parts.iter().all(|(ok, _)| *ok), detail.join("; "))
}

/// Stiffness sweep: safety gains at least 0.10 from `0.1 β*` to `10 β*`
/// and cost at `10 β*` exceeds cost at `β*`.
pub fn exp2_phase_transition(rows: &[AggregateRow]) -> Criterion {
    let (lo, hi, one) = (value_label(0.1), value_label(10.0), value_label(1.0));
    let gain = safety(rows, "ppc", &hi) - safety(rows, "ppc", &lo);
    let (c10, c1) = (cost(rows, "ppc", &hi), cost(rows, "ppc", &one));
    combine(
        "exp2_phase_transition",
        &[
            (gain >= 0.10, format!("safety gain {gain:.3} >= 0.10")),
            (c10 > c1, format!("cost(10) {c10:.3} > cost(1) {c1:.3}")),
        ],
    )
}

/// Sample budgets: safety non-decreasing within the slack, a score-error
/// exponent of at most `-1/3` and a tenfold error drop from `N = 10` to
/// `N = 1000`.
pub fn exp3_rate(rows: &[AggregateRow], budgets: &[usize], fit: Option<RateFit>) -> Criterion {
    let s: Vec<f64> = budgets.iter().map(|n| safety(rows, "ppc", &n.to_string())).collect();
    let monotone = s.len() >= 2 && s.windows(2).all(|w| w[1] >= w[0] - MONOTONE_SLACK);
    let slope = fit.map_or(f64::NAN, |f| f.exponent);
    let err = |n: usize| find(rows, "ppc", &n.to_string()).map_or(f64::NAN, |a| a.score_error_mean);
    let (e10, e1000) = (err(10), err(1000));
    let trend: Vec<String> = s.iter().map(|v| format!("{v:.3}")).collect();
    combine(
        "exp3_rate",
        &[
            (monotone, format!("safety monotone within {MONOTONE_SLACK} [{}]", trend.join(" "))),
            (slope <= -1.0 / 3.0, format!("exponent {slope:.3} <= -1/3")),
            (e1000 < 0.1 * e10, format!("error(1000) {e1000:.3} < 0.1 x error(10) {e10:.3}")),
        ],
    )
}

/// Twenty obstacles: PPC safety exceeds CBF-QP safety by at least 0.15.
pub fn exp4_scalability(rows: &[AggregateRow]) -> Criterion {
    let (ppc, cbf) = (safety(rows, "ppc", "20"), safety(rows, "cbf_qp", "20"));
    combine("exp4_scalability", &[(ppc - cbf >= 0.15, format!("ppc {ppc:.3} - cbf_qp {cbf:.3} >= 0.15"))])
}

/// Speed sweep: positive cost/path-length correlation and safety of at
/// least 0.85 at every speed.
pub fn exp5_drift(rows: &[AggregateRow], speeds: &[f64], correlation: Option<f64>) -> Criterion {
    let r = correlation.unwrap_or(f64::NAN);
    let s: Vec<f64> = speeds.iter().map(|w| safety(rows, "ppc", &value_label(*w))).collect();
    let min = s.iter().copied().fold(f64::INFINITY, f64::min);
    combine(
        "exp5_drift",
        &[
            (r > 0.0, format!("correlation {r:.3} > 0")),
            (!s.is_empty() && min >= 0.85, format!("min safety {min:.3} >= 0.85")),
        ],
    )
}

/// Recurring modes: the conditional model is at least 0.02 safer than the
/// marginal one, and the frozen contextual model is less safe right after
/// a switch than in steady state.
pub fn exp6_context(rows: &[AggregateRow]) -> Criterion {
    let gap = safety(rows, "ppc_context", "") - safety(rows, "ppc_marginal", "");
    let off = find(rows, "offline_contextual", "");
    let (post, steady) = off.map_or((f64::NAN, f64::NAN), |a| (a.post_switch_mean, a.steady_mean));
    combine(
        "exp6_context",
        &[
            (gap >= 0.02, format!("context - marginal {gap:.3} >= 0.02")),
            (post < steady, format!("offline post-switch {post:.3} < steady {steady:.3}")),
        ],
    )
}

/// `‖u_t - ū‖ ≤ G_c/(β_t κ) + tol` on every PPC step whose filter stayed
/// inactive. Steps without a model (blocked) carry no bound and are skipped.
pub fn displacement_bound(episodes: &[EpisodeLog]) -> Criterion {
    let (mut held, mut total, mut excess) = (0usize, 0usize, 0.0f64);
    for e in episodes.iter().filter(|e| e.key.controller == "ppc") {
        for s in e.steps.iter().filter(|s| !s.filter_active && !s.blocked) {
            total += 1;
            let d = ((s.action_x - s.peak_x).powi(2) + (s.action_y - s.peak_y).powi(2)).sqrt();
            let bound = s.g_c / (s.beta_t * s.kappa) + DISPLACEMENT_TOL;
            if d <= bound {
                held += 1;
            } else {
                excess = excess.max(d - bound);
            }
        }
    }
    Criterion::new(
        "displacement_bound",
        total > 0 && held == total,
        format!("bound held on {held}/{total} unfiltered ppc steps, worst excess {excess:.3}"),
    )
}

pub fn runtime_budget(seconds: f64) -> Criterion {
    Criterion::new("desk_runtime", seconds < DESK_BUDGET_SECS, format!("{seconds:.0} s < {DESK_BUDGET_SECS:.0} s"))
}
