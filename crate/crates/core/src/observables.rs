//! Population observables: sums of basis-state populations over index groups.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::basis::{Level, SystemBasis};
use crate::error::{domain, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Observables {
    labels: Vec<String>,
    /// Groups containing each basis state, with the state's weight in that group.
    membership: Vec<Vec<(usize, f64)>>,
}

impl Observables {
    /// One observable per basis state, labelled by the state.
    pub fn states(basis: &SystemBasis) -> Self {
        Observables { labels: basis.states().iter().map(|s| s.label()).collect(), membership: (0..basis.dim()).map(|i| vec![(i, 1.0)]).collect() }
    }

    pub fn from_groups(dim: usize, labels: Vec<String>, groups: &[Vec<usize>]) -> Result<Self> {
        if labels.len() != groups.len() {
            return Err(domain!("{} labels for {} groups", labels.len(), groups.len()));
        }
        let mut membership = vec![Vec::new(); dim];
        for (g, group) in groups.iter().enumerate() {
            for &i in group {
                if i >= dim {
                    return Err(domain!("group {g} names state {i}, outside dimension {dim}"));
                }
                membership[i].push((g, 1.0));
            }
        }
        Ok(Observables { labels, membership })
    }

    /// Photon-number distributions of both modes (`n+=k`, `n-=k`) and ground Zeeman populations (`g m`).
    pub fn reduced(basis: &SystemBasis) -> Self {
        let n = basis.n_max() as usize + 1;
        let fg = basis.scheme().f_g;
        let mut labels: Vec<String> = (0..n).map(|k| format!("n+={k}")).collect();
        labels.extend((0..n).map(|k| format!("n-={k}")));
        labels.extend(Self::ground_labels(fg));
        let membership = basis
            .states()
            .iter()
            .map(|s| {
                let mut v = vec![(s.n_plus as usize, 1.0), (n + s.n_minus as usize, 1.0)];
                if s.level == Level::Ground {
                    v.push((2 * n + ((s.m.twice() + fg.twice()) / 2) as usize, 1.0));
                }
                v
            })
            .collect();
        Observables { labels, membership }
    }

    /// Mean photon numbers `<n+>`, `<n->` followed by the ground Zeeman populations.
    pub fn occupations(basis: &SystemBasis) -> Self {
        let fg = basis.scheme().f_g;
        let mut labels = vec![String::from("<n+>"), String::from("<n->")];
        labels.extend(Self::ground_labels(fg));
        let membership = basis
            .states()
            .iter()
            .map(|s| {
                let mut v = Vec::new();
                if s.n_plus > 0 {
                    v.push((0, s.n_plus as f64));
                }
                if s.n_minus > 0 {
                    v.push((1, s.n_minus as f64));
                }
                if s.level == Level::Ground {
                    v.push((2 + ((s.m.twice() + fg.twice()) / 2) as usize, 1.0));
                }
                v
            })
            .collect();
        Observables { labels, membership }
    }

    fn ground_labels(fg: crate::angular::HalfInt) -> Vec<String> {
        let mut out = Vec::new();
        let mut m = -fg;
        for _ in 0..fg.multiplicity() {
            let sign = if m.twice() > 0 { "+" } else { "" };
            out.push(format!("g{sign}{m}"));
            m = crate::angular::HalfInt::from_twice(m.twice() + 2);
        }
        out
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dim(&self) -> usize {
        self.membership.len()
    }

    /// Adds `p` for basis state `index` into `out`.
    pub fn accumulate(&self, index: usize, p: f64, out: &mut [f64]) {
        for &(g, w) in &self.membership[index] {
            out[g] += w * p;
        }
    }

    pub fn evaluate(&self, probs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for (i, &p) in probs.iter().enumerate() {
            self.accumulate(i, p, &mut out);
        }
        out
    }

    /// Index of the observable labelled `label`.
    pub fn position(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}
