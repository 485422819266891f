use crate::density::KdeModel;
use crate::linalg::clip_to_disk;
use crate::Vec2;

/// What the safety filter did to a candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterReport {
    /// The candidate was below the level threshold.
    pub active: bool,
    pub iterations: usize,
    pub final_density: f64,
    /// Ascent ran out of steps (or underflowed) before reaching `α`.
    pub exhausted: bool,
}

/// Score-ascent retraction into `{p̂ ≥ α}`.
///
/// Candidates already inside are returned unchanged. Otherwise up to `j`
/// steps `u ← clip(u + η_r ŝ(u))` are taken, stopping as soon as the density
/// reaches `α`. On exhaustion the highest-density iterate is returned.
pub fn safety_filter(
    model: &KdeModel,
    alpha: f64,
    u_ppc: Vec2,
    j: usize,
    eta_r: f64,
    u_max: f64,
) -> (Vec2, FilterReport) {
    let d0 = model.density(&u_ppc);
    if d0 >= alpha {
        return (u_ppc, FilterReport { active: false, iterations: 0, final_density: d0, exhausted: false });
    }
    let (mut best, mut best_d) = (u_ppc, d0);
    let mut u = u_ppc;
    for i in 0..j {
        let Ok(s) = model.score(&u) else { break };
        u = clip_to_disk(u + eta_r * s, u_max);
        let d = model.density(&u);
        if d > best_d {
            best = u;
            best_d = d;
        }
        if d >= alpha {
            return (u, FilterReport { active: true, iterations: i + 1, final_density: d, exhausted: false });
        }
    }
    (best, FilterReport { active: true, iterations: j, final_density: best_d, exhausted: true })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inside_candidate_is_untouched() {
        let m = KdeModel::new(vec![Vec2::zeros()], 0.3).unwrap();
        let u = Vec2::new(0.1, 0.0);
        let (out, rep) = safety_filter(&m, 0.5 * m.density(&u), u, 10, 0.045, 1.0);
        assert_eq!(out, u);
        assert!(!rep.active);
        assert_eq!(rep.iterations, 0);
    }

    #[test]
    fn single_gaussian_ascent_is_monotone() {
        let h = 0.3;
        let m = KdeModel::new(vec![Vec2::zeros()], h).unwrap();
        let alpha = m.density(&Vec2::new(0.1, 0.0));
        let mut u = Vec2::new(0.9, 0.0);
        let mut d = m.density(&u);
        for _ in 0..20 {
            let (next, _) = safety_filter(&m, alpha, u, 1, 0.5 * h * h, 1.0);
            if (next - u).norm() == 0.0 {
                break;
            }
            assert!(next.x < u.x && next.x > 0.0);
            assert!(m.density(&next) > d);
            u = next;
            d = m.density(&u);
        }
        let (_, rep) = safety_filter(&m, alpha, Vec2::new(0.9, 0.0), 25, 0.5 * h * h, 1.0);
        assert!(!rep.exhausted && rep.final_density >= alpha);
    }

    #[test]
    fn zero_budget_exhausts() {
        let m = KdeModel::new(vec![Vec2::zeros()], 0.3).unwrap();
        let u = Vec2::new(0.9, 0.0);
        let (out, rep) = safety_filter(&m, m.density(&Vec2::zeros()) * 0.9, u, 0, 0.045, 1.0);
        assert_eq!(out, u);
        assert!(rep.exhausted);
    }
}
