//! Compensated summation with a fixed reduction order.
//!
//! Quadrature integrands are evaluated in parallel into an ordered buffer and
//! then reduced sequentially, so results are bit-identical for every thread
//! count.

use rayon::prelude::*;

use crate::Vec3;

/// Kahan–Babuška (Neumaier) accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl std::iter::FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = KahanSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Compensated sum in iteration order.
pub fn kahan_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().collect::<KahanSum>().value()
}

/// Component-wise compensated accumulator for 3-vectors.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanVec3 {
    parts: [KahanSum; 3],
}

impl KahanVec3 {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, v: &Vec3) {
        for (p, c) in self.parts.iter_mut().zip(v.iter()) {
            p.add(*c);
        }
    }

    pub fn value(&self) -> Vec3 {
        Vec3::new(
            self.parts[0].value(),
            self.parts[1].value(),
            self.parts[2].value(),
        )
    }
}

/// Evaluates `f` on every item in parallel and reduces the results in item
/// order with compensated summation.
///
/// The first error (in item order) is returned.
pub fn par_sum<T, F, E>(items: &[T], f: F) -> Result<f64, E>
where
    T: Sync,
    F: Fn(&T) -> Result<f64, E> + Sync + Send,
    E: Send,
{
    let values: Vec<Result<f64, E>> = items.par_iter().map(&f).collect();
    let mut acc = KahanSum::new();
    for v in values {
        acc.add(v?);
    }
    Ok(acc.value())
}

/// Vector-valued analogue of [`par_sum`].
pub fn par_sum_vec3<T, F, E>(items: &[T], f: F) -> Result<Vec3, E>
where
    T: Sync,
    F: Fn(&T) -> Result<Vec3, E> + Sync + Send,
    E: Send,
{
    let values: Vec<Result<Vec3, E>> = items.par_iter().map(&f).collect();
    let mut acc = KahanVec3::new();
    for v in values {
        acc.add(&v?);
    }
    Ok(acc.value())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut values = vec![1.0e16];
        values.extend(std::iter::repeat_n(1.0, 1000));
        values.push(-1.0e16);
        assert_eq!(kahan_sum(values.iter().copied()), 1000.0);
    }

    #[test]
    fn par_sum_is_thread_count_independent() {
        let items: Vec<f64> = (0..10_000)
            .map(|i| (i as f64 * 0.37).sin() / (1.0 + i as f64))
            .collect();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| par_sum::<_, _, ()>(&items, |x| Ok(x * x)).unwrap())
        };
        let one = run(1);
        assert_eq!(one.to_bits(), run(3).to_bits());
        assert_eq!(one.to_bits(), run(8).to_bits());
    }
}
