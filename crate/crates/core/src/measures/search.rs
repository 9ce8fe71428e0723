use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::matcore::{Frame, ProjPoint};
use crate::rng::stream_rng;

/// Settings for maximising a function over the unit sphere modulo sign.
///
/// On `P¹` the search evaluates `n_angle` equally spaced angles and refines
/// the best one by golden-section search. In higher dimension it runs a
/// plane-rotation pattern search from `starts` random directions plus any
/// caller-supplied candidates. Results are lower bounds of the supremum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SphereSearch {
    pub n_angle: usize,
    pub starts: usize,
    pub seed: u64,
}

impl Default for SphereSearch {
    fn default() -> Self {
        SphereSearch { n_angle: 4096, starts: 64, seed: 0 }
    }
}

/// Frames-based search over `Gr_k(R^m)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrassmannSearch {
    pub starts: usize,
    pub seed: u64,
}

impl Default for GrassmannSearch {
    fn default() -> Self {
        GrassmannSearch { starts: 64, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchResult {
    pub value: f64,
    pub argmax: ProjPoint,
    /// Grid spacing (angle) on `P¹`, final pattern step otherwise.
    pub mesh: f64,
}

/// Pattern-search rounds per start; the step doubles after a successful
/// round and halves otherwise.
const MAX_ROUNDS: usize = 2000;

const GOLDEN: f64 = 0.618_033_988_749_894_9;

pub(crate) fn golden_max(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

fn better(a: (f64, usize), b: (f64, usize)) -> (f64, usize) {
    // NaN loses; ties go to the lower index
    match (a.0.is_nan(), b.0.is_nan()) {
        (true, _) => b,
        (_, true) => a,
        _ if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) => b,
        _ => a,
    }
}

/// Maximise `f` over unit vectors of `R^dim`. `f` must be even.
pub fn sphere_max<F>(dim: usize, f: F, search: &SphereSearch, candidates: &[Vec<f64>]) -> SearchResult
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    match dim {
        1 => SearchResult { value: f(&[1.0]), argmax: ProjPoint::basis(1, 0), mesh: 0.0 },
        2 => circle_max(&f, search.n_angle.max(3), candidates),
        _ => pattern_max(dim, &f, search, candidates),
    }
}

fn circle_max<F: Fn(&[f64]) -> f64 + Sync>(f: &F, n: usize, candidates: &[Vec<f64>]) -> SearchResult {
    let h = PI / n as f64;
    let g = |t: f64| {
        let (s, c) = t.sin_cos();
        f(&[c, s])
    };
    let (gv, gi) = (0..n)
        .into_par_iter()
        .map(|i| (g(i as f64 * h), i))
        .reduce(|| (f64::NAN, usize::MAX), better);
    let mut starts: Vec<f64> = vec![gi as f64 * h];
    for c in candidates {
        if let Ok(p) = ProjPoint::new(c) {
            starts.push(p.angle());
        }
    }
    let mut best = (gi as f64 * h, gv);
    for t0 in starts {
        let (t, v) = golden_max(&g, t0 - h, t0 + h, 80);
        let v0 = g(t0);
        for (t, v) in [(t0, v0), (t, v)] {
            if v > best.1 || best.1.is_nan() {
                best = (t, v);
            }
        }
    }
    SearchResult { value: best.1, argmax: ProjPoint::from_angle(best.0), mesh: h }
}

fn rotate(v: &mut [f64], i: usize, j: usize, t: f64) {
    let (s, c) = t.sin_cos();
    let (a, b) = (v[i], v[j]);
    v[i] = c * a - s * b;
    v[j] = s * a + c * b;
}

fn pattern_max<F: Fn(&[f64]) -> f64 + Sync>(
    dim: usize,
    f: &F,
    search: &SphereSearch,
    candidates: &[Vec<f64>],
) -> SearchResult {
    let mut starts: Vec<Vec<f64>> = candidates.iter().filter_map(|c| ProjPoint::new(c).ok()).map(|p| p.rep().to_vec()).collect();
    for i in 0..dim {
        starts.push(ProjPoint::basis(dim, i).rep().to_vec());
    }
    for s in 0..search.starts {
        let mut rng = stream_rng(search.seed, s as u64);
        starts.push(ProjPoint::random(dim, &mut rng).rep().to_vec());
    }
    let results: Vec<(Vec<f64>, f64, f64)> = starts
        .into_par_iter()
        .map(|mut v| {
            let mut fv = f(&v);
            let mut step = 0.25;
            let mut rounds = 0;
            while step > 1e-9 && rounds < MAX_ROUNDS {
                rounds += 1;
                let mut improved = false;
                for i in 0..dim {
                    for j in (i + 1)..dim {
                        for sign in [1.0, -1.0] {
                            let mut w = v.clone();
                            rotate(&mut w, i, j, sign * step);
                            let fw = f(&w);
                            if fw > fv {
                                v = w;
                                fv = fw;
                                improved = true;
                            }
                        }
                    }
                }
                step = if improved { (2.0 * step).min(0.25) } else { 0.5 * step };
            }
            (v, fv, step)
        })
        .collect();
    let (mut bi, mut bv) = (0, f64::NAN);
    for (i, r) in results.iter().enumerate() {
        if bv.is_nan() || r.1 > bv {
            bi = i;
            bv = r.1;
        }
    }
    let (v, value, step) = &results[bi];
    SearchResult { value: *value, argmax: ProjPoint::new(v).expect("unit vector"), mesh: *step }
}

/// Maximise `f` over `k`-dimensional subspaces given by orthonormal frames.
pub fn grassmann_max<F>(dim: usize, k: usize, f: F, search: &GrassmannSearch, candidates: &[Frame]) -> (f64, Frame)
where
    F: Fn(&Frame) -> f64 + Sync,
{
    if k == dim {
        let id = Frame::identity(dim, dim);
        return (f(&id), id);
    }
    let mut starts: Vec<Frame> = candidates.to_vec();
    starts.push(Frame::identity(dim, k));
    for s in 0..search.starts {
        let mut rng = stream_rng(search.seed, s as u64);
        starts.push(Frame::random(dim, k, &mut rng));
    }
    let results: Vec<(Frame, f64)> = starts
        .into_par_iter()
        .map(|mut fr| {
            let mut fv = f(&fr);
            let mut step = 0.25;
            let mut rounds = 0;
            while step > 1e-8 && rounds < MAX_ROUNDS {
                rounds += 1;
                let mut improved = false;
                for i in 0..dim {
                    for j in (i + 1)..dim {
                        for sign in [1.0, -1.0] {
                            let mut cols = fr.as_slice().to_vec();
                            for c in 0..k {
                                rotate(&mut cols[c * dim..(c + 1) * dim], i, j, sign * step);
                            }
                            let Ok(w) = Frame::from_columns(dim, k, &cols) else { continue };
                            let fw = f(&w);
                            if fw > fv {
                                fr = w;
                                fv = fw;
                                improved = true;
                            }
                        }
                    }
                }
                step = if improved { (2.0 * step).min(0.25) } else { 0.5 * step };
            }
            (fr, fv)
        })
        .collect();
    let mut best = 0;
    for (i, r) in results.iter().enumerate() {
        if r.1 > results[best].1 || results[best].1.is_nan() {
            best = i;
        }
    }
    let (fr, v) = results.into_iter().nth(best).expect("at least one start");
    (v, fr)
}
