//! Stream observations, bounded sliding windows, lagged embeddings and
//! reference bookkeeping.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::cde::DensityEstimate;
use crate::error::{invalid, Error, Result};

/// One element of a `d`-dimensional stream.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub index: u64,
    pub time: Option<f64>,
    pub value: Vec<f64>,
}

impl Observation {
    pub fn new(index: u64, value: Vec<f64>) -> Self {
        Self { index, time: None, value }
    }

    pub fn scalar(index: u64, x: f64) -> Self {
        Self::new(index, vec![x])
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = Some(time);
        self
    }

    pub fn dim(&self) -> usize {
        self.value.len()
    }

    /// Rejects empty vectors and NaN/Inf components.
    pub fn validate(&self) -> Result<()> {
        if self.value.is_empty() {
            return Err(Error::DimensionMismatch { expected: 1, got: 0 });
        }
        if let Some(component) = self.value.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index: self.index, component });
        }
        if let Some(t) = self.time {
            if !t.is_finite() {
                return Err(invalid(format!("non-finite time at index {}", self.index)));
            }
        }
        Ok(())
    }
}

/// Fixed-capacity window over the most recent observations, oldest first.
///
/// Pushing onto a full window evicts the oldest element. Cloning is the
/// snapshot operation: downstream estimators only ever see immutable
/// copies.
#[derive(Clone, Debug, PartialEq)]
pub struct Window {
    capacity: usize,
    dim: Option<usize>,
    buf: VecDeque<Observation>,
}

impl Window {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(invalid("window capacity must be positive"));
        }
        Ok(Self { capacity, dim: None, buf: VecDeque::with_capacity(capacity) })
    }

    /// Window of capacity `values.len()` filled with scalar observations
    /// indexed from 0.
    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        let mut w = Self::new(values.len().max(1))?;
        for (i, &v) in values.iter().enumerate() {
            w.push(Observation::scalar(i as u64, v))?;
        }
        Ok(w)
    }

    /// Window of capacity `points.len()` filled with vector observations.
    pub fn from_points<P: AsRef<[f64]>>(points: &[P]) -> Result<Self> {
        let mut w = Self::new(points.len().max(1))?;
        for (i, p) in points.iter().enumerate() {
            w.push(Observation::new(i as u64, p.as_ref().to_vec()))?;
        }
        Ok(w)
    }

    pub fn push(&mut self, obs: Observation) -> Result<()> {
        obs.validate()?;
        if let Some(d) = self.dim {
            if obs.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, got: obs.dim() });
            }
        }
        if let Some(last) = self.buf.back() {
            if obs.index <= last.index {
                return Err(Error::OutOfOrder { last: last.index, got: obs.index });
            }
            if let (Some(t0), Some(t1)) = (last.time, obs.time) {
                if t1 <= t0 {
                    return Err(invalid(format!(
                        "time {t1} at index {} does not increase",
                        obs.index
                    )));
                }
            }
        }
        self.dim = Some(obs.dim());
        if self.buf.len() == self.capacity {
            self.buf.pop_front();
        }
        self.buf.push_back(obs);
        Ok(())
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.buf.len() == self.capacity
    }

    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    /// Stream position of the newest element.
    pub fn end_index(&self) -> Option<u64> {
        self.buf.back().map(|o| o.index)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Observation> {
        self.buf.iter()
    }

    pub fn get(&self, i: usize) -> Option<&Observation> {
        self.buf.get(i)
    }

    /// Contents as owned vectors, oldest first.
    pub fn points(&self) -> Vec<Vec<f64>> {
        self.buf.iter().map(|o| o.value.clone()).collect()
    }

    /// Contents of a one-dimensional window as plain reals.
    pub fn scalars(&self) -> Result<Vec<f64>> {
        match self.dim {
            None | Some(1) => Ok(self.buf.iter().map(|o| o.value[0]).collect()),
            Some(d) => Err(Error::DimensionMismatch { expected: 1, got: d }),
        }
    }

    pub fn clear(&mut self) {
        self.buf.clear();
    }
}

/// Lagged pairs `(x_{t-k}, x_t)` built from a one-dimensional window.
#[derive(Clone, Debug, PartialEq)]
pub struct LaggedPairs {
    pub lag: usize,
    pub pairs: Vec<[f64; 2]>,
}

impl LaggedPairs {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn xs(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p[0]).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p[1]).collect()
    }
}

pub fn lag_embed(window: &Window, k: usize) -> Result<LaggedPairs> {
    lag_embed_values(&window.scalars()?, k)
}

pub fn lag_embed_values(values: &[f64], k: usize) -> Result<LaggedPairs> {
    if k == 0 {
        return Err(invalid("lag must be positive"));
    }
    if k >= values.len() {
        return Err(Error::LagTooLarge { lag: k, len: values.len() });
    }
    let pairs = values.iter().zip(&values[k..]).map(|(&a, &b)| [a, b]).collect();
    Ok(LaggedPairs { lag: k, pairs })
}

/// A stored regime exemplar: either a raw sample or a density on a fixed grid.
#[derive(Clone, Debug)]
pub enum Reference {
    Sample(Window),
    Density(DensityEstimate),
}

/// The `M + 1` regime references a working window is tested against.
#[derive(Clone, Debug)]
pub struct ReferenceSet {
    entries: Vec<Reference>,
    labels: Vec<String>,
}

impl ReferenceSet {
    pub fn new(entries: Vec<Reference>, labels: Vec<String>) -> Result<Self> {
        if entries.len() < 2 {
            return Err(invalid("a reference set needs at least two entries"));
        }
        if labels.len() != entries.len() {
            return Err(Error::LengthMismatch(format!(
                "{} references but {} labels",
                entries.len(),
                labels.len()
            )));
        }
        let mut grids = entries.iter().filter_map(|e| match e {
            Reference::Density(d) => Some(d),
            Reference::Sample(_) => None,
        });
        if let Some(first) = grids.next() {
            for d in grids {
                if !first.same_grid(d) {
                    return Err(Error::GridMismatch);
                }
            }
        }
        Ok(Self { entries, labels })
    }

    /// Sample references labelled `regime0`, `regime1`, ...
    pub fn from_samples(samples: Vec<Window>) -> Result<Self> {
        let labels = (0..samples.len()).map(|i| format!("regime{i}")).collect();
        Self::new(samples.into_iter().map(Reference::Sample).collect(), labels)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Reference] {
        &self.entries
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn contents(w: &Window) -> Vec<f64> {
        w.scalars().unwrap()
    }

    #[test]
    fn push_into_empty_window() {
        let mut w = Window::new(3).unwrap();
        w.push(Observation::scalar(0, 1.0)).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(contents(&w), vec![1.0]);
        assert_eq!(w.end_index(), Some(0));
    }

    #[test]
    fn push_evicts_oldest_at_capacity() {
        let mut w = Window::from_scalars(&[1.0, 2.0, 3.0]).unwrap();
        w.push(Observation::scalar(3, 4.0)).unwrap();
        assert_eq!(contents(&w), vec![2.0, 3.0, 4.0]);
        assert_eq!(w.end_index(), Some(3));
    }

    #[test]
    fn push_rejects_nan_and_dimension_change() {
        let mut w = Window::new(3).unwrap();
        assert!(matches!(
            w.push(Observation::scalar(0, f64::NAN)),
            Err(Error::NonFinite { .. })
        ));
        w.push(Observation::scalar(0, 1.0)).unwrap();
        assert!(matches!(
            w.push(Observation::new(1, vec![1.0, 2.0])),
            Err(Error::DimensionMismatch { expected: 1, got: 2 })
        ));
        assert!(matches!(
            w.push(Observation::scalar(0, 1.0)),
            Err(Error::OutOfOrder { .. })
        ));
    }

    #[test]
    fn time_must_increase() {
        let mut w = Window::new(3).unwrap();
        w.push(Observation::scalar(0, 1.0).with_time(1.5)).unwrap();
        assert!(w.push(Observation::scalar(1, 1.0).with_time(1.5)).is_err());
        w.push(Observation::scalar(1, 1.0).with_time(2.0)).unwrap();
    }

    #[test]
    fn lag_embed_counts_and_order() {
        let w = Window::from_scalars(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let z = lag_embed(&w, 1).unwrap();
        assert_eq!(z.pairs, vec![[1.0, 2.0], [2.0, 3.0], [3.0, 4.0], [4.0, 5.0]]);

        let w = Window::from_scalars(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(lag_embed(&w, 2).unwrap().pairs, vec![[1.0, 3.0]]);
        assert!(matches!(lag_embed(&w, 3), Err(Error::LagTooLarge { .. })));
        assert!(lag_embed(&w, 0).is_err());
    }

    #[test]
    fn lag_embed_long_window_round_trip() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.37).sin()).collect();
        let w = Window::from_scalars(&xs).unwrap();
        let z = lag_embed(&w, 1).unwrap();
        assert_eq!(z.len(), 999);
        assert_eq!(z.xs(), xs[..999].to_vec());
        assert_eq!(z.ys(), xs[1..].to_vec());
    }

    #[test]
    fn reference_set_needs_two_entries() {
        let w = Window::from_scalars(&[1.0, 2.0]).unwrap();
        assert!(ReferenceSet::from_samples(vec![w.clone()]).is_err());
        let set = ReferenceSet::from_samples(vec![w.clone(), w]).unwrap();
        assert_eq!(set.labels(), &["regime0".to_string(), "regime1".to_string()]);
    }
}
