//! Node generation on the hypersurface `Z(Q)` and randomized search for
//! poised configurations.
//!
//! Existence of poised sets is generic (off a measure-zero exceptional set),
//! but nothing in the theory is constructive, so the search draws seeded
//! random configurations honoring the necessary count bounds and keeps the
//! first one whose sample matrix certificate is nonzero. Rational parameter
//! draws come from a seeded PRNG mapped to small-denominator rationals, which
//! keeps the whole pipeline exact and makes "det = 0" versus "det ≠ 0"
//! unambiguous.
//!
//! Samplers: hyperplane factors are parametrized rationally (exact, any
//! scalar); general factors are intersected with random rational lines and
//! resolved by univariate root finding (float path, possibly complex points).

use std::collections::HashSet;

use num_complex::Complex;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::darboux::{
    build_sample_matrices, node_count_diagnostics, poisedness, DarbouxSpec, NodeEntry, NodeSet,
    Poisedness,
};
use crate::error::{Error, Result};
use crate::graded_basis::{cumulative_dim, window_size};
use crate::mvopr::{require_degree, MVOPRFamily};
use crate::poly::{Direction, MPoly};
use crate::scalar::{ComplexParts, FromReal, Rat, Scalar};
use crate::Tolerances;

/// Node scalars that know how to draw points on a factor's hypersurface.
/// `Rat` supports the exact hyperplane strategy; `Complex<f64>` adds
/// line-restriction root finding for factors of higher degree.
pub trait NodeSampling<S: Scalar>: Scalar + FromReal<S> + ComplexParts<S> {
    fn sample_on_factor(
        factor: &MPoly<S>,
        count: usize,
        used: &mut HashSet<String>,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<Vec<Self>>>;
}

/// One random parameter as a small-denominator rational.
fn rational_parameter(rng: &mut ChaCha8Rng) -> (i64, i64) {
    let num = rng.random_range(-400..=400i64);
    let den = rng.random_range(1..=24i64);
    (num, den)
}

fn point_key<F: Scalar>(point: &[F]) -> String {
    point
        .iter()
        .map(Scalar::format_literal)
        .collect::<Vec<_>>()
        .join(";")
}

/// Exact parametrization of a degree-one factor `c_0 + Σ c_a x_a = 0`: draw
/// the free coordinates, solve for the pivot.
fn sample_hyperplane<F: Scalar>(
    factor: &MPoly<F>,
    count: usize,
    used: &mut HashSet<String>,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Vec<F>>> {
    if factor.degree() != Some(1) {
        return Err(Error::Invalid(format!(
            "hyperplane sampler needs a degree-1 factor, got degree {:?}; \
             use the float scalar (line restriction) or supply nodes",
            factor.degree()
        )));
    }
    let dimension = factor.dimension();
    let mut linear = vec![F::zero(); dimension];
    let mut constant = F::zero();
    for (alpha, c) in factor.terms() {
        match alpha.degree() {
            0 => constant = c.clone(),
            1 => {
                let axis = alpha.0.iter().position(|&e| e == 1).unwrap();
                linear[axis] = c.clone();
            }
            _ => unreachable!(),
        }
    }
    let pivot = (0..dimension)
        .filter(|&a| !linear[a].is_zero())
        .max_by(|&a, &b| {
            linear[a]
                .abs_f64()
                .partial_cmp(&linear[b].abs_f64())
                .unwrap()
        })
        .ok_or_else(|| Error::Invalid("degenerate linear factor".into()))?;

    let mut out = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while out.len() < count {
        attempts += 1;
        if attempts > 200 * (count + 1) {
            return Err(Error::Invalid(format!(
                "could not draw {count} distinct points on the hyperplane"
            )));
        }
        let mut point = vec![F::zero(); dimension];
        let mut acc = constant.clone();
        for (axis, slot) in point.iter_mut().enumerate() {
            if axis == pivot {
                continue;
            }
            let (n, d) = rational_parameter(rng);
            let t = F::from_ratio(n, d);
            acc = acc + linear[axis].clone() * t.clone();
            *slot = t;
        }
        point[pivot] = -acc / linear[pivot].clone();
        let key = point_key(&point);
        if used.insert(key) {
            out.push(point);
        }
    }
    Ok(out)
}

impl NodeSampling<Rat> for Rat {
    fn sample_on_factor(
        factor: &MPoly<Rat>,
        count: usize,
        used: &mut HashSet<String>,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<Vec<Rat>>> {
        sample_hyperplane(factor, count, used, rng)
    }
}

impl NodeSampling<f64> for Complex<f64> {
    fn sample_on_factor(
        factor: &MPoly<f64>,
        count: usize,
        used: &mut HashSet<String>,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<Vec<Complex<f64>>>> {
        if factor.degree() == Some(1) {
            let embedded: MPoly<Complex<f64>> = factor.embed();
            return sample_hyperplane(&embedded, count, used, rng);
        }
        let mut out = Vec::with_capacity(count);
        let mut attempts = 0usize;
        while out.len() < count {
            attempts += 1;
            if attempts > 100 * (count + 1) {
                return Err(Error::RootFinding);
            }
            let (base, dir) = random_line(factor.dimension(), rng);
            let Ok(points) = line_roots(factor, &base, &dir) else {
                continue;
            };
            for p in points {
                if out.len() == count {
                    break;
                }
                let key = point_key(&p);
                if used.insert(key) {
                    out.push(p);
                }
            }
        }
        Ok(out)
    }
}

fn random_line(dimension: usize, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    loop {
        let base: Vec<f64> = (0..dimension)
            .map(|_| {
                let (n, d) = rational_parameter(rng);
                n as f64 / (d as f64 * 100.0)
            })
            .collect();
        let dir: Vec<f64> = (0..dimension)
            .map(|_| rng.random_range(-9..=9i64) as f64)
            .collect();
        if dir.iter().any(|&v| v != 0.0) {
            return (base, dir);
        }
    }
}

/// Intersects `Z(factor)` with the line `base + t·dir`: expands the
/// univariate restriction, finds all complex roots, polishes them by Newton
/// steps, and maps back. Emitted points satisfy `|R(p)| ≤ 1e-12` relative.
pub fn line_roots(
    factor: &MPoly<f64>,
    base: &[f64],
    dir: &[f64],
) -> Result<Vec<Vec<Complex<f64>>>> {
    let dimension = factor.dimension();
    let mut g = vec![0.0f64; factor.degree().unwrap_or(0) + 1];
    for (alpha, c) in factor.terms() {
        let mut term = vec![*c];
        for axis in 0..dimension {
            for _ in 0..alpha.0[axis] {
                // Multiply the univariate accumulator by base + t·dir.
                let mut next = vec![0.0; term.len() + 1];
                for (i, v) in term.iter().enumerate() {
                    next[i] += v * base[axis];
                    next[i + 1] += v * dir[axis];
                }
                term = next;
            }
        }
        for (i, v) in term.iter().enumerate() {
            g[i] += v;
        }
    }
    while g.len() > 1 && g.last().map(|v| v.abs() < 1e-14).unwrap_or(false) {
        g.pop();
    }
    if g.len() < 2 {
        return Err(Error::RootFinding);
    }
    let roots = durand_kerner(&g)?;
    let scale = factor.max_abs_coeff().max(1.0);
    let embedded: MPoly<Complex<f64>> = factor.embed();
    let mut out = Vec::with_capacity(roots.len());
    for t in roots {
        let point: Vec<Complex<f64>> = (0..dimension)
            .map(|a| Complex::new(base[a], 0.0) + Complex::new(dir[a], 0.0) * t)
            .collect();
        let residual = embedded.eval(&point);
        if residual.abs_f64() > 1e-12 * scale {
            return Err(Error::RootFinding);
        }
        out.push(point);
    }
    Ok(out)
}

/// All complex roots of a univariate polynomial by Durand–Kerner iteration
/// with Newton polishing. Adequate for the low degrees of prime factors.
fn durand_kerner(coeffs: &[f64]) -> Result<Vec<Complex<f64>>> {
    let n = coeffs.len() - 1;
    let lead = coeffs[n];
    if lead == 0.0 {
        return Err(Error::RootFinding);
    }
    let monic: Vec<Complex<f64>> = coeffs
        .iter()
        .map(|&c| Complex::new(c / lead, 0.0))
        .collect();
    let eval = |z: Complex<f64>| -> Complex<f64> {
        let mut acc = Complex::new(0.0, 0.0);
        for &c in monic.iter().rev() {
            acc = acc * z + c;
        }
        acc
    };
    let deriv = |z: Complex<f64>| -> Complex<f64> {
        let mut acc = Complex::new(0.0, 0.0);
        for i in (1..=n).rev() {
            acc = acc * z + monic[i] * Complex::new(i as f64, 0.0);
        }
        acc
    };
    let seed = Complex::new(0.4, 0.9);
    let mut z: Vec<Complex<f64>> = (0..n).map(|i| seed.powu(i as u32 + 1)).collect();
    for _ in 0..300 {
        let mut moved = 0.0f64;
        for i in 0..n {
            let mut denom = Complex::new(1.0, 0.0);
            for j in 0..n {
                if i != j {
                    denom *= z[i] - z[j];
                }
            }
            if denom.norm() == 0.0 {
                return Err(Error::RootFinding);
            }
            let step = eval(z[i]) / denom;
            z[i] -= step;
            moved = moved.max(step.norm());
        }
        if moved < 1e-14 {
            break;
        }
    }
    for zi in z.iter_mut() {
        for _ in 0..4 {
            let d = deriv(*zi);
            if d.norm() == 0.0 {
                break;
            }
            *zi -= eval(*zi) / d;
        }
        if eval(*zi).norm() > 1e-9 {
            return Err(Error::RootFinding);
        }
    }
    Ok(z)
}

/// Point source on one factor's hypersurface with a persistent distinctness
/// set. Strategy selection is by factor degree: exact parametrization for
/// hyperplanes, random-line root finding otherwise (float scalars only).
pub struct HypersurfaceSampler<S: Scalar> {
    factor: MPoly<S>,
    used: HashSet<String>,
}

impl<S: Scalar> HypersurfaceSampler<S> {
    pub fn new(factor: MPoly<S>) -> Self {
        HypersurfaceSampler {
            factor,
            used: HashSet::new(),
        }
    }

    pub fn sample<F: NodeSampling<S>>(
        &mut self,
        count: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<Vec<F>>> {
        F::sample_on_factor(&self.factor, count, &mut self.used, rng)
    }
}

/// One `(factor, order, direction-axis)` class of a split plan, with its
/// node count.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassSpec {
    pub factor: usize,
    pub order: usize,
    pub axis: usize,
    pub count: usize,
}

/// Draws a node set realizing an explicit split plan. No count bounds are
/// enforced here; the caller owns the plan (the search passes admissible
/// plans, tests may pass deliberately violating ones).
pub fn draw_node_set<S, F>(
    spec: &DarbouxSpec<S>,
    plan: &[ClassSpec],
    rng: &mut ChaCha8Rng,
) -> Result<NodeSet<F>>
where
    S: Scalar,
    F: NodeSampling<S>,
{
    let dimension = spec.dimension();
    let mut entries = Vec::new();
    let mut used: Vec<HashSet<String>> = vec![HashSet::new(); spec.num_factors()];
    for class in plan {
        let points = F::sample_on_factor(
            spec.factor(class.factor),
            class.count,
            &mut used[class.factor],
            rng,
        )?;
        for point in points {
            entries.push(NodeEntry {
                point,
                factor: class.factor,
                order: class.order,
                direction: Direction::axis(dimension, class.axis, class.order),
            });
        }
    }
    Ok(NodeSet::new(entries))
}

/// Per-class candidate with its count upper bound.
#[derive(Debug, Clone)]
struct ClassCandidate {
    order: usize,
    axis: usize,
    upper: usize,
}

/// A direction axis is unusable for `(R, j)` when the order-`j` coordinate
/// partial annihilates `R^p` on `Z(R)` for some `p ≤ j` — detected
/// executably as the derivative being the zero polynomial or divisible by
/// `R`. (For `p > j` divisibility is automatic by the Leibniz rule and says
/// nothing.)
fn axis_forbidden<S: Scalar>(r: &MPoly<S>, d_a: u32, order: usize, axis: usize) -> bool {
    let dir = Direction::axis(r.dimension(), axis, order);
    for p in 1..=(order as u32).min(d_a) {
        let derived = r.pow(p).directional_derivative(&dir);
        if derived.is_zero() || derived.divide_exact(r, 1e-12).is_ok() {
            return true;
        }
    }
    false
}

/// Class candidates for one factor under an optional order restriction,
/// with the count upper bounds of the node-distribution propositions.
fn factor_classes<S: Scalar>(
    spec: &DarbouxSpec<S>,
    a: usize,
    k: usize,
    allowed_orders: Option<&[usize]>,
) -> Result<Vec<ClassCandidate>> {
    let dimension = spec.dimension();
    let m = spec.total_degree();
    let n_a = spec.factor_degree(a);
    let d_a = spec.multiplicity(a);
    let mut out = Vec::new();
    for order in 0..d_a as usize {
        if let Some(allowed) = allowed_orders {
            if !allowed.contains(&order) {
                continue;
            }
        }
        if order == 0 {
            let upper = window_size(dimension, k + m - n_a, n_a)?;
            out.push(ClassCandidate {
                order: 0,
                axis: 0,
                upper,
            });
            continue;
        }
        for axis in 0..dimension {
            if axis_forbidden(spec.factor(a), d_a, order, axis) {
                continue;
            }
            let derived = spec
                .factor(a)
                .pow(d_a)
                .directional_derivative(&Direction::axis(dimension, axis, order));
            let Some(d) = derived.degree() else {
                continue;
            };
            if d >= k + m {
                continue;
            }
            let n_total = cumulative_dim(dimension, (k + m) as i64 - 1)?;
            let n_low = cumulative_dim(dimension, (k + m) as i64 - 1 - d as i64)?;
            out.push(ClassCandidate {
                order,
                axis,
                upper: n_total - n_low,
            });
        }
    }
    Ok(out)
}

/// All ways to write `total` as a sum over slots within per-slot uppers.
fn compositions(total: usize, uppers: &[usize], cap: usize) -> Vec<Vec<usize>> {
    fn rec(
        total: usize,
        uppers: &[usize],
        prefix: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
        cap: usize,
    ) {
        if out.len() >= cap {
            return;
        }
        if uppers.len() == 1 {
            if total <= uppers[0] {
                prefix.push(total);
                out.push(prefix.clone());
                prefix.pop();
            }
            return;
        }
        let rest: usize = uppers[1..].iter().sum();
        let lo = total.saturating_sub(rest);
        let hi = total.min(uppers[0]);
        for v in lo..=hi {
            prefix.push(v);
            rec(total - v, &uppers[1..], prefix, out, cap);
            prefix.pop();
        }
    }
    if uppers.is_empty() {
        return if total == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    rec(total, uppers, &mut Vec::new(), &mut out, cap);
    out
}

pub struct SearchOptions {
    /// Number of random draws before giving up.
    pub budget: usize,
    /// Restrict derivative orders (e.g. `Some(vec![0])` forces plain nodes).
    pub allowed_orders: Option<Vec<usize>>,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            budget: 50,
            allowed_orders: None,
        }
    }
}

/// Successful search outcome.
pub struct PoisedSearch<F: Scalar> {
    pub nodes: NodeSet<F>,
    pub verdict: Poisedness,
    pub draws: usize,
    pub plan: Vec<ClassSpec>,
}

/// Draws splits satisfying the necessary count bounds, samples points, tests
/// poisedness, and retries up to the budget. The first poised configuration
/// wins; failure reports the best certificate seen and, when the bounds
/// themselves are unsatisfiable (e.g. a repeated factor restricted to plain
/// nodes), says why.
pub fn search_poised<S, F>(
    fam: &MVOPRFamily<S>,
    spec: &DarbouxSpec<S>,
    k: usize,
    opts: &SearchOptions,
    seed: u64,
    tols: &Tolerances,
) -> Result<PoisedSearch<F>>
where
    S: Scalar,
    F: NodeSampling<S>,
{
    let dimension = spec.dimension();
    let m = spec.total_degree();
    if m == 0 {
        return Ok(PoisedSearch {
            nodes: NodeSet::new(vec![]),
            verdict: Poisedness {
                poised: true,
                certificate: "degenerate constant perturbation".into(),
                certificate_abs: 1.0,
            },
            draws: 0,
            plan: vec![],
        });
    }
    require_degree(fam.basis(), k, m)?;
    let r = window_size(dimension, k, m)?;

    let mut classes: Vec<Vec<ClassCandidate>> = Vec::new();
    for a in 0..spec.num_factors() {
        classes.push(factor_classes(spec, a, k, opts.allowed_orders.as_deref())?);
    }
    let lowers: Vec<usize> = (0..spec.num_factors())
        .map(|a| {
            if dimension > 1 {
                k.div_ceil(spec.multiplicity(a) as usize) + spec.factor_degree(a)
            } else {
                0
            }
        })
        .collect();
    let uppers: Vec<usize> = classes
        .iter()
        .map(|cs| cs.iter().map(|c| c.upper).sum::<usize>().min(r))
        .collect();

    let mut quota_options: Vec<Vec<usize>> = compositions(r, &uppers, 4096)
        .into_iter()
        .filter(|q| q.iter().zip(&lowers).all(|(v, lo)| v >= lo))
        .collect();

    let mut structural_reason = String::new();
    if quota_options.is_empty() {
        // No split satisfies the necessary bounds. Draw best-effort evidence
        // anyway: spread nodes over whatever classes exist, ignoring uppers.
        structural_reason = if spec.factors().iter().any(|(_, d)| *d > 1)
            && opts
                .allowed_orders
                .as_deref()
                .is_some_and(|orders| orders == [0])
        {
            " a repeated prime factor admits no poised set of plain nodes \
             (derivative tags are required)"
                .into()
        } else {
            " no node split satisfies the necessary count bounds".into()
        };
        if classes.iter().all(|c| c.is_empty()) {
            return Err(Error::BudgetExhausted {
                draws: 0,
                best: 0.0,
                reason: format!("no admissible node classes;{structural_reason}"),
            });
        }
        quota_options = vec![balanced_quota(r, spec.num_factors())];
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0f64;
    let mut draws = 0usize;
    for _ in 0..opts.budget {
        draws += 1;
        let quota = &quota_options[rng.random_range(0..quota_options.len())];
        let mut plan: Vec<ClassSpec> = Vec::new();
        let mut feasible = true;
        for (a, &q) in quota.iter().enumerate() {
            let class_uppers: Vec<usize> = classes[a].iter().map(|c| c.upper).collect();
            let mut splits = compositions(q, &class_uppers, 1024);
            if splits.is_empty() {
                // Best-effort fallback: greedy fill ignoring the uppers.
                if classes[a].is_empty() {
                    feasible = false;
                    break;
                }
                let mut counts = vec![0usize; classes[a].len()];
                for i in 0..q {
                    counts[i % classes[a].len()] += 1;
                }
                splits = vec![counts];
            }
            let choice = &splits[rng.random_range(0..splits.len())];
            for (c, &count) in classes[a].iter().zip(choice) {
                if count > 0 {
                    plan.push(ClassSpec {
                        factor: a,
                        order: c.order,
                        axis: c.axis,
                        count,
                    });
                }
            }
        }
        if !feasible {
            continue;
        }
        let nodes: NodeSet<F> = draw_node_set(spec, &plan, &mut rng)?;
        let samples = build_sample_matrices(fam, spec, &nodes, k, tols)?;
        let verdict = poisedness(&samples.sigma, tols);
        best = best.max(verdict.certificate_abs);
        if verdict.poised {
            return Ok(PoisedSearch {
                nodes,
                verdict,
                draws,
                plan,
            });
        }
    }
    Err(Error::BudgetExhausted {
        draws,
        best,
        reason: if structural_reason.is_empty() {
            "every sampled configuration was singular".into()
        } else {
            format!("every sampled configuration was singular;{structural_reason}")
        },
    })
}

fn balanced_quota(total: usize, parts: usize) -> Vec<usize> {
    let mut out = vec![total / parts; parts];
    for slot in out.iter_mut().take(total % parts) {
        *slot += 1;
    }
    out
}

/// Checks that a search result honors the necessary count bounds; callers
/// use it to attach the certificate trail to reports.
pub fn check_search_result<S, F>(
    spec: &DarbouxSpec<S>,
    result: &PoisedSearch<F>,
    k: usize,
) -> Result<bool>
where
    S: Scalar,
    F: Scalar + FromReal<S>,
{
    Ok(node_count_diagnostics(spec, &result.nodes, k)?.ok)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::BoxMeasure;
    use num_traits::Zero;
    use std::sync::Arc;

    fn rp(s: &str) -> MPoly<Rat> {
        MPoly::parse(s, 2).unwrap()
    }

    fn unit_box_family(l: usize) -> MVOPRFamily<Rat> {
        let one = Rat::from_int(1);
        let m = BoxMeasure::uniform(vec![(-one.clone(), one.clone()), (-one.clone(), one)]);
        MVOPRFamily::compute(Arc::new(m), l, 0.0).unwrap()
    }

    #[test]
    fn hyperplane_sampler_is_exact_and_distinct() {
        let mut sampler = HypersurfaceSampler::new(rp("2 - x1"));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let points: Vec<Vec<Rat>> = sampler.sample(5, &mut rng).unwrap();
        assert_eq!(points.len(), 5);
        let factor = rp("2 - x1");
        let mut seen = HashSet::new();
        for p in &points {
            assert!(factor.eval(p).is_zero());
            assert!(seen.insert(point_key(p)));
        }
    }

    #[test]
    fn line_roots_on_circle() {
        let circle = MPoly::<f64>::parse("x1^2 + x2^2 - 4", 2).unwrap();
        // The horizontal axis meets the circle at (±2, 0).
        let pts = line_roots(&circle, &[0.0, 0.0], &[1.0, 0.0]).unwrap();
        let mut xs: Vec<f64> = pts.iter().map(|p| p[0].re).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((xs[0] + 2.0).abs() < 1e-12 && (xs[1] - 2.0).abs() < 1e-12);
        for p in &pts {
            assert!(p[0].im.abs() < 1e-12 && p[1].im.abs() < 1e-12);
        }

        // An empty real variety yields the conjugate pair (±i, 0).
        let imaginary = MPoly::<f64>::parse("x1^2 + x2^2 + 1", 2).unwrap();
        let pts = line_roots(&imaginary, &[0.0, 0.0], &[1.0, 0.0]).unwrap();
        let mut ims: Vec<f64> = pts.iter().map(|p| p[0].im).collect();
        ims.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((ims[0] + 1.0).abs() < 1e-12 && (ims[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn search_finds_poised_sets_for_the_worked_example() {
        let fam = unit_box_family(5);
        let spec = DarbouxSpec::new(vec![(rp("2 - x1"), 1), (rp("2 - x2"), 1)]).unwrap();
        let tols = Tolerances::default();
        for k in 0..=2usize {
            let result: PoisedSearch<Rat> =
                search_poised(&fam, &spec, k, &SearchOptions::default(), 7, &tols).unwrap();
            assert!(result.verdict.poised);
            assert!(check_search_result(&spec, &result, k).unwrap());
            let expected = window_size(2, k, 2).unwrap();
            assert_eq!(result.nodes.len(), expected);
        }
    }

    #[test]
    fn search_success_rate_across_seeds() {
        let fam = unit_box_family(4);
        let spec = DarbouxSpec::new(vec![(rp("2 - x1"), 1), (rp("2 - x2"), 1)]).unwrap();
        let tols = Tolerances::default();
        for seed in 0..20u64 {
            let result: Result<PoisedSearch<Rat>> =
                search_poised(&fam, &spec, 1, &SearchOptions::default(), seed, &tols);
            assert!(result.is_ok(), "seed {seed}");
        }
    }

    #[test]
    fn confluent_search_uses_derivative_tags() {
        let fam = unit_box_family(5);
        let spec = DarbouxSpec::new(vec![(rp("2 - x1"), 2)]).unwrap();
        let tols = Tolerances::default();
        for k in 0..=1usize {
            let result: PoisedSearch<Rat> =
                search_poised(&fam, &spec, k, &SearchOptions::default(), 3, &tols).unwrap();
            assert!(result.verdict.poised, "k = {k}");
            assert!(
                result.nodes.entries().iter().any(|e| e.order == 1),
                "k = {k} needs derivative tags"
            );
            // Only ∂/∂x appears: ∂/∂y annihilates 2 - x1.
            assert!(result
                .nodes
                .entries()
                .iter()
                .all(|e| e.order == 0 || e.direction == Direction::axis(2, 0, 1)));
        }
    }

    #[test]
    fn plain_only_search_on_repeated_factor_fails_with_reason() {
        let fam = unit_box_family(5);
        let spec = DarbouxSpec::new(vec![(rp("2 - x1"), 2)]).unwrap();
        let opts = SearchOptions {
            budget: 8,
            allowed_orders: Some(vec![0]),
        };
        let tols = Tolerances::default();
        let result: Result<PoisedSearch<Rat>> = search_poised(&fam, &spec, 0, &opts, 11, &tols);
        match result {
            Err(Error::BudgetExhausted {
                draws,
                best,
                reason,
            }) => {
                assert_eq!(draws, 8);
                assert_eq!(best, 0.0);
                assert!(reason.contains("repeated prime factor"), "{reason}");
            }
            Err(other) => panic!("expected BudgetExhausted, got {other:?}"),
            Ok(_) => panic!("a plain-node set on a repeated factor cannot be poised"),
        }
    }

    #[test]
    fn zero_budget_exhausts_immediately() {
        let fam = unit_box_family(5);
        let spec = DarbouxSpec::new(vec![(rp("2 - x1"), 1), (rp("2 - x2"), 1)]).unwrap();
        let opts = SearchOptions {
            budget: 0,
            allowed_orders: None,
        };
        let result: Result<PoisedSearch<Rat>> =
            search_poised(&fam, &spec, 0, &opts, 1, &Tolerances::default());
        assert!(matches!(
            result,
            Err(Error::BudgetExhausted { draws: 0, .. })
        ));
    }

    #[test]
    fn forbidden_axis_detection() {
        let r = rp("2 - x1");
        assert!(axis_forbidden(&r, 2, 1, 1)); // ∂/∂y kills 2 - x1
        assert!(!axis_forbidden(&r, 2, 1, 0)); // ∂/∂x does not
        let circle = rp("x1^2 + x2^2 - 4");
        assert!(!axis_forbidden(&circle, 2, 1, 0));
        assert!(!axis_forbidden(&circle, 2, 1, 1));
    }

    #[test]
    fn deterministic_draws() {
        let spec = DarbouxSpec::new(vec![(rp("2 - x1"), 1), (rp("2 - x2"), 1)]).unwrap();
        let plan = vec![
            ClassSpec {
                factor: 0,
                order: 0,
                axis: 0,
                count: 2,
            },
            ClassSpec {
                factor: 1,
                order: 0,
                axis: 0,
                count: 1,
            },
        ];
        let mut rng1 = ChaCha8Rng::seed_from_u64(42);
        let mut rng2 = ChaCha8Rng::seed_from_u64(42);
        let a: NodeSet<Rat> = draw_node_set(&spec, &plan, &mut rng1).unwrap();
        let b: NodeSet<Rat> = draw_node_set(&spec, &plan, &mut rng2).unwrap();
        for (x, y) in a.entries().iter().zip(b.entries()) {
            assert_eq!(x.point, y.point);
        }
    }
}
