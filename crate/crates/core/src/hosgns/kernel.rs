use std::fmt::Debug;
use std::ops::AddAssign;

use num_traits::Float;
use rayon::prelude::*;

use super::embedding::EmbeddingSet;
use super::loss::log_sigmoid;

/// Floating-point type the batch kernels run in.
pub trait Real: Float + AddAssign + Default + Debug + Send + Sync + 'static {
    fn of(x: f64) -> Self;
    fn f64(self) -> f64;
}

impl Real for f32 {
    fn of(x: f64) -> Self {
        x as f32
    }
    fn f64(self) -> f64 {
        f64::from(self)
    }
}

impl Real for f64 {
    fn of(x: f64) -> Self {
        x
    }
    fn f64(self) -> f64 {
        self
    }
}

/// Mini-batch of positive and negative index tuples with their loss weights.
///
/// The batch loss is `-w_pos sum_pos log s(m) - w_neg sum_neg log s(-m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    order: usize,
    positives: Vec<usize>,
    negatives: Vec<usize>,
    pub positive_weight: f64,
    pub negative_weight: f64,
}

impl Batch {
    pub fn new(order: usize, positive_weight: f64, negative_weight: f64) -> Self {
        Self { order, positives: Vec::new(), negatives: Vec::new(), positive_weight, negative_weight }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn clear(&mut self) {
        self.positives.clear();
        self.negatives.clear();
    }

    pub fn push_positive(&mut self, idx: &[usize]) {
        debug_assert_eq!(idx.len(), self.order);
        self.positives.extend_from_slice(idx);
    }

    pub fn push_negative(&mut self, idx: &[usize]) {
        debug_assert_eq!(idx.len(), self.order);
        self.negatives.extend_from_slice(idx);
    }

    pub fn num_positives(&self) -> usize {
        self.positives.len() / self.order
    }

    pub fn num_negatives(&self) -> usize {
        self.negatives.len() / self.order
    }

    pub fn positives(&self) -> impl Iterator<Item = &[usize]> {
        self.positives.chunks_exact(self.order)
    }

    pub fn negatives(&self) -> impl Iterator<Item = &[usize]> {
        self.negatives.chunks_exact(self.order)
    }
}

/// Dense gradient buffers laid out like the factors.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient<T = f64> {
    pub factors: Vec<Vec<T>>,
}

impl<T: Real> Gradient<T> {
    pub fn zeros(lengths: impl IntoIterator<Item = usize>) -> Self {
        Self { factors: lengths.into_iter().map(|n| vec![T::zero(); n]).collect() }
    }

    pub fn clear(&mut self) {
        self.factors.iter_mut().for_each(|f| f.iter_mut().for_each(|x| *x = T::zero()));
    }

    pub fn row(&self, n: usize, i: usize, dim: usize) -> &[T] {
        &self.factors[n][i * dim..(i + 1) * dim]
    }

    pub fn row_mut(&mut self, n: usize, i: usize, dim: usize) -> &mut [T] {
        &mut self.factors[n][i * dim..(i + 1) * dim]
    }

    /// Rows of factor `n` with at least one nonzero entry.
    pub fn nonzero_rows(&self, n: usize, dim: usize) -> Vec<usize> {
        self.factors[n]
            .chunks_exact(dim)
            .enumerate()
            .filter(|(_, r)| r.iter().any(|&x| x != T::zero()))
            .map(|(i, _)| i)
            .collect()
    }

    fn add(&mut self, other: &Self) {
        for (a, b) in self.factors.iter_mut().zip(&other.factors) {
            a.iter_mut().zip(b).for_each(|(x, &y)| *x += y);
        }
    }
}

impl Gradient<f64> {
    pub fn zeros_like(e: &EmbeddingSet) -> Self {
        Self::zeros(e.factors().iter().map(|f| f.data().len()))
    }
}

/// Summed positive and negative parts of a batch loss.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BatchLoss {
    pub positive_term: f64,
    pub negative_term: f64,
}

impl BatchLoss {
    pub fn total(&self) -> f64 {
        self.positive_term + self.negative_term
    }
}

/// Factor matrices borrowed as flat row-major slices.
#[derive(Clone, Copy)]
pub(crate) struct View<'a, T> {
    pub factors: &'a [Vec<T>],
    pub dim: usize,
}

impl<T: Real> View<'_, T> {
    #[inline]
    fn row(&self, n: usize, i: usize) -> &[T] {
        &self.factors[n][i * self.dim..(i + 1) * self.dim]
    }

    fn inner(&self, idx: &[usize]) -> T {
        let mut acc = T::zero();
        for r in 0..self.dim {
            let mut p = T::one();
            for (n, &i) in idx.iter().enumerate() {
                p = p * self.factors[n][i * self.dim + r];
            }
            acc += p;
        }
        acc
    }
}

const LANES: usize = 16;

/// Halving tree: lane `l` is paired with lane `l + width/2` at each level.
#[inline]
fn lane_sum<T: Real>(mut a: [T; LANES]) -> T {
    let mut width = LANES;
    while width > 1 {
        width /= 2;
        for l in 0..width {
            a[l] = a[l] + a[l + width];
        }
    }
    a[0]
}

#[inline]
fn dot2<T: Real>(a: &[T], b: &[T]) -> T {
    let (a8, ar) = a.as_chunks::<LANES>();
    let (b8, br) = b[..a.len()].as_chunks::<LANES>();
    let mut acc = [T::zero(); LANES];
    for (x, y) in a8.iter().zip(b8) {
        for l in 0..LANES {
            acc[l] += x[l] * y[l];
        }
    }
    let mut tail = T::zero();
    for (&x, &y) in ar.iter().zip(br) {
        tail += x * y;
    }
    lane_sum(acc) + tail
}

#[inline]
fn dot3<T: Real>(a: &[T], b: &[T], c: &[T]) -> T {
    let (a8, ar) = a.as_chunks::<LANES>();
    let (b8, br) = b[..a.len()].as_chunks::<LANES>();
    let (c8, cr) = c[..a.len()].as_chunks::<LANES>();
    let mut acc = [T::zero(); LANES];
    for ((x, y), z) in a8.iter().zip(b8).zip(c8) {
        for l in 0..LANES {
            acc[l] += x[l] * y[l] * z[l];
        }
    }
    let mut tail = T::zero();
    for ((&x, &y), &z) in ar.iter().zip(br).zip(cr) {
        tail += x * y * z;
    }
    lane_sum(acc) + tail
}

#[inline]
fn dot4<T: Real>(a: &[T], b: &[T], c: &[T], d: &[T]) -> T {
    let (a8, ar) = a.as_chunks::<LANES>();
    let (b8, br) = b[..a.len()].as_chunks::<LANES>();
    let (c8, cr) = c[..a.len()].as_chunks::<LANES>();
    let (d8, dr) = d[..a.len()].as_chunks::<LANES>();
    let mut acc = [T::zero(); LANES];
    for (((x, y), z), w) in a8.iter().zip(b8).zip(c8).zip(d8) {
        for l in 0..LANES {
            acc[l] += x[l] * y[l] * z[l] * w[l];
        }
    }
    let mut tail = T::zero();
    for (((&x, &y), &z), &w) in ar.iter().zip(br).zip(cr).zip(dr) {
        tail += x * y * z * w;
    }
    lane_sum(acc) + tail
}

#[inline]
fn rows_mut<T>(flat: &mut [T], i: usize, dim: usize) -> &mut [T] {
    &mut flat[i * dim..(i + 1) * dim]
}

#[inline]
fn score<T: Real>(v: View<'_, T>, idx: &[usize]) -> T {
    match idx.len() {
        2 => dot2(v.row(0, idx[0]), v.row(1, idx[1])),
        3 => dot3(v.row(0, idx[0]), v.row(1, idx[1]), v.row(2, idx[2])),
        4 => dot4(v.row(0, idx[0]), v.row(1, idx[1]), v.row(2, idx[2]), v.row(3, idx[3])),
        _ => v.inner(idx),
    }
}

/// `(sigmoid(-x), log_sigmoid(x))` from a single exponential; the logarithm is zero
/// unless `LOSS`.
#[inline]
fn sigmoid_terms<const LOSS: bool>(x: f64) -> (f64, f64) {
    let e = (-x.abs()).exp();
    let log = if LOSS { e.ln_1p() } else { 0.0 };
    if x >= 0.0 {
        (e / (1.0 + e), -log)
    } else {
        (1.0 / (1.0 + e), if LOSS { x - log } else { 0.0 })
    }
}

/// Adds the gradient of one tuple. `loss_terms` maps its score to the loss derivative
/// and the loss contribution, which is returned.
#[inline]
fn tuple_step<T: Real>(
    v: View<'_, T>,
    idx: &[usize],
    grad: &mut [Vec<T>],
    loss_terms: impl Fn(f64) -> (f64, f64),
) -> f64 {
    let dim = v.dim;
    let (dl_dm, loss) = loss_terms(score(v, idx).f64());
    let g = T::of(dl_dm);
    match idx.len() {
        2 => {
            let (a, b) = (v.row(0, idx[0]), v.row(1, idx[1]));
            let [ga, gb] = grad else { unreachable!() };
            let (ga, gb) = (rows_mut(ga, idx[0], dim), rows_mut(gb, idx[1], dim));
            for r in 0..dim {
                ga[r] += g * b[r];
                gb[r] += g * a[r];
            }
        }
        3 => {
            let (a, b, c) = (v.row(0, idx[0]), v.row(1, idx[1]), v.row(2, idx[2]));
            let [ga, gb, gc] = grad else { unreachable!() };
            let (ga, gb, gc) = (rows_mut(ga, idx[0], dim), rows_mut(gb, idx[1], dim), rows_mut(gc, idx[2], dim));
            for r in 0..dim {
                let g_a = g * a[r];
                ga[r] += g * b[r] * c[r];
                gb[r] += g_a * c[r];
                gc[r] += g_a * b[r];
            }
        }
        4 => {
            let (a, b, c, d) = (v.row(0, idx[0]), v.row(1, idx[1]), v.row(2, idx[2]), v.row(3, idx[3]));
            let [ga, gb, gc, gd] = grad else { unreachable!() };
            let (ga, gb) = (rows_mut(ga, idx[0], dim), rows_mut(gb, idx[1], dim));
            let (gc, gd) = (rows_mut(gc, idx[2], dim), rows_mut(gd, idx[3], dim));
            for r in 0..dim {
                let (gab, gcd) = (g * a[r] * b[r], g * c[r] * d[r]);
                ga[r] += gcd * b[r];
                gb[r] += gcd * a[r];
                gc[r] += gab * d[r];
                gd[r] += gab * c[r];
            }
        }
        _ => {
            for r in 0..dim {
                for n in 0..idx.len() {
                    let mut others = g;
                    for (k, &i) in idx.iter().enumerate() {
                        if k != n {
                            others = others * v.factors[k][i * dim + r];
                        }
                    }
                    grad[n][idx[n] * dim + r] += others;
                }
            }
        }
    }
    loss
}

/// Loss terms are zero unless `LOSS`.
fn accumulate_range<T: Real, const LOSS: bool>(
    v: View<'_, T>,
    batch: &Batch,
    pos: &[usize],
    neg: &[usize],
    grad: &mut [Vec<T>],
) -> BatchLoss {
    let (wp, wn) = (batch.positive_weight, batch.negative_weight);
    let (mut lp, mut ln) = (0.0, 0.0);
    for idx in pos.chunks_exact(batch.order) {
        lp += tuple_step(v, idx, grad, |m| {
            let (s_neg, ls) = sigmoid_terms::<LOSS>(m);
            (-wp * s_neg, -ls)
        });
    }
    for idx in neg.chunks_exact(batch.order) {
        ln += tuple_step(v, idx, grad, |m| {
            let (s_pos, ls) = sigmoid_terms::<LOSS>(-m);
            (wn * s_pos, -ls)
        });
    }
    BatchLoss { positive_term: wp * lp, negative_term: wn * ln }
}

fn accumulate_slices<T: Real>(
    v: View<'_, T>,
    batch: &Batch,
    pos: &[usize],
    neg: &[usize],
    grad: &mut [Vec<T>],
    with_loss: bool,
) -> BatchLoss {
    if with_loss {
        accumulate_range::<T, true>(v, batch, pos, neg, grad)
    } else {
        accumulate_range::<T, false>(v, batch, pos, neg, grad)
    }
}

/// Adds the batch gradient to `grad`; the returned loss is zero unless `with_loss`.
pub(crate) fn accumulate_view<T: Real>(v: View<'_, T>, batch: &Batch, grad: &mut Gradient<T>, with_loss: bool) -> BatchLoss {
    accumulate_slices(v, batch, &batch.positives, &batch.negatives, &mut grad.factors, with_loss)
}

/// Splits the batch into `chunks` slices processed in parallel and reduced in slice
/// order, so the result depends on `chunks` but not on the worker count.
pub(crate) fn accumulate_view_parallel<T: Real>(
    v: View<'_, T>,
    batch: &Batch,
    grad: &mut Gradient<T>,
    scratch: &mut Vec<Gradient<T>>,
    chunks: usize,
    with_loss: bool,
) -> BatchLoss {
    let chunks = chunks.max(1);
    let split = |flat: &[usize]| -> Vec<(usize, usize)> {
        let tuples = flat.len() / batch.order;
        (0..chunks).map(|c| (tuples * c / chunks * batch.order, tuples * (c + 1) / chunks * batch.order)).collect()
    };
    let (ps, ns) = (split(&batch.positives), split(&batch.negatives));
    scratch.resize_with(chunks, || Gradient::zeros(grad.factors.iter().map(Vec::len)));
    let losses: Vec<BatchLoss> = scratch
        .par_iter_mut()
        .enumerate()
        .map(|(c, g)| {
            g.clear();
            let (p, n) = (&batch.positives[ps[c].0..ps[c].1], &batch.negatives[ns[c].0..ns[c].1]);
            accumulate_slices(v, batch, p, n, &mut g.factors, with_loss)
        })
        .collect();
    let mut total = BatchLoss::default();
    for (g, l) in scratch.iter().zip(losses) {
        grad.add(g);
        total.positive_term += l.positive_term;
        total.negative_term += l.negative_term;
    }
    total
}

pub(crate) fn batch_loss_view<T: Real>(v: View<'_, T>, batch: &Batch) -> BatchLoss {
    let pos: f64 = batch.positives().map(|idx| -log_sigmoid(score(v, idx).f64())).sum();
    let neg: f64 = batch.negatives().map(|idx| -log_sigmoid(-score(v, idx).f64())).sum();
    BatchLoss { positive_term: batch.positive_weight * pos, negative_term: batch.negative_weight * neg }
}

fn flat_factors(e: &EmbeddingSet) -> Vec<Vec<f64>> {
    e.factors().iter().map(|f| f.data().to_vec()).collect()
}

/// Batch loss without gradients.
pub fn batch_loss(e: &EmbeddingSet, batch: &Batch) -> BatchLoss {
    let factors = flat_factors(e);
    batch_loss_view(View { factors: &factors, dim: e.dim() }, batch)
}

/// Adds the batch-loss gradient to `grad` in draw order and returns the batch loss.
pub fn accumulate_gradient(e: &EmbeddingSet, batch: &Batch, grad: &mut Gradient) -> BatchLoss {
    let factors = flat_factors(e);
    accumulate_view(View { factors: &factors, dim: e.dim() }, batch, grad, true)
}

/// Same as [`accumulate_gradient`], processing `chunks` slices of the batch in parallel.
pub fn accumulate_gradient_parallel(e: &EmbeddingSet, batch: &Batch, grad: &mut Gradient, chunks: usize) -> BatchLoss {
    let factors = flat_factors(e);
    accumulate_view_parallel(View { factors: &factors, dim: e.dim() }, batch, grad, &mut Vec::new(), chunks, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cooccurrence::ModeRole;
    use crate::hosgns::Factor;
    use crate::seed;

    #[test]
    fn specialised_scores_match_generic() {
        let mut rng = seed::rng(1);
        for order in 2..=5 {
            for dim in [1, 7, 8, 19] {
                let sizes = vec![3; order];
                let e = EmbeddingSet::uniform(&sizes, &ModeRole::defaults(order), dim, 3.0, &mut rng).unwrap();
                let factors = flat_factors(&e);
                let idx: Vec<usize> = (0..order).map(|n| n % 3).collect();
                assert!((score(View { factors: &factors, dim }, &idx) - e.inner(&idx)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_positive_pair_hand_formula() {
        let w = Factor::new(ModeRole::Node, 1, 1, vec![0.7]).unwrap();
        let c = Factor::new(ModeRole::Context, 1, 1, vec![-0.4]).unwrap();
        let e = EmbeddingSet::from_factors(vec![w, c]).unwrap();
        let mut b = Batch::new(2, 1.0, 1.0);
        b.push_positive(&[0, 0]);
        let mut g = Gradient::zeros_like(&e);
        accumulate_gradient(&e, &b, &mut g);
        let m: f64 = 0.7 * -0.4;
        let expect = -(1.0 - 1.0 / (1.0 + (-m).exp())) * -0.4;
        assert!((g.factors[0][0] - expect).abs() < 1e-15);
        assert_eq!(g.nonzero_rows(1, 1), vec![0]);
    }

    #[test]
    fn parallel_matches_sequential() {
        let mut rng = seed::rng(2);
        let e = EmbeddingSet::uniform(&[4, 4, 3], &ModeRole::defaults(3), 5, 2.0, &mut rng).unwrap();
        let mut b = Batch::new(3, 0.1, 0.05);
        for i in 0..40 {
            b.push_positive(&[i % 4, (i / 4) % 4, i % 3]);
            b.push_negative(&[(i + 1) % 4, (i / 3) % 4, (i + 2) % 3]);
        }
        let (mut g1, mut g2) = (Gradient::zeros_like(&e), Gradient::zeros_like(&e));
        let l1 = accumulate_gradient(&e, &b, &mut g1);
        let l2 = accumulate_gradient_parallel(&e, &b, &mut g2, 3);
        assert!((l1.total() - l2.total()).abs() < 1e-12);
        for (x, y) in g1.factors.iter().flatten().zip(g2.factors.iter().flatten()) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!((batch_loss(&e, &b).total() - l1.total()).abs() < 1e-12);
    }

    #[test]
    fn single_precision_tracks_double() {
        let mut rng = seed::rng(4);
        let e = EmbeddingSet::uniform(&[3, 3, 3, 3], &ModeRole::defaults(4), 16, 2.0, &mut rng).unwrap();
        let mut b = Batch::new(4, 0.5, 0.5);
        b.push_positive(&[0, 1, 2, 0]);
        b.push_negative(&[0, 2, 1, 1]);
        let f64s = flat_factors(&e);
        let f32s: Vec<Vec<f32>> = f64s.iter().map(|f| f.iter().map(|&x| x as f32).collect()).collect();
        let mut g64 = Gradient::zeros(f64s.iter().map(Vec::len));
        let mut g32 = Gradient::<f32>::zeros(f32s.iter().map(Vec::len));
        let l64 = accumulate_view(View { factors: &f64s, dim: 16 }, &b, &mut g64, true);
        let l32 = accumulate_view(View { factors: &f32s, dim: 16 }, &b, &mut g32, true);
        assert!((l64.total() - l32.total()).abs() < 1e-5);
        for (x, y) in g64.factors.iter().flatten().zip(g32.factors.iter().flatten()) {
            assert!((x - f64::from(*y)).abs() < 1e-5);
        }
    }

    #[test]
    fn gradient_does_not_depend_on_loss_evaluation() {
        let mut rng = seed::rng(5);
        let e = EmbeddingSet::uniform(&[4, 3, 5], &ModeRole::defaults(3), 9, 3.0, &mut rng).unwrap();
        let mut b = Batch::new(3, 0.5, 0.25);
        b.push_positive(&[0, 1, 2]);
        b.push_positive(&[3, 2, 4]);
        b.push_negative(&[0, 0, 0]);
        b.push_negative(&[3, 1, 1]);
        let f = flat_factors(&e);
        let (mut with, mut without) = (Gradient::zeros_like(&e), Gradient::zeros_like(&e));
        let loss = accumulate_view(View { factors: &f, dim: 9 }, &b, &mut with, true);
        let none = accumulate_view(View { factors: &f, dim: 9 }, &b, &mut without, false);
        assert_eq!(with, without);
        assert!(loss.total() > 0.0);
        assert_eq!(none.total(), 0.0);
        assert_eq!(loss, batch_loss(&e, &b));
    }
}
