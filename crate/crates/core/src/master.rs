//! Lindblad master equation `d rho/dt = -i (H_eff rho - rho H_eff') + sum_c C rho C'`.
//!
//! `rho` is stored as dense blocks between `H_int` sectors. Only the blocks
//! reachable from the initial state under the collapse operators are kept.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{domain, numerical, Error, Result};
use crate::hamiltonian::{Hamiltonian, PulsedOperator};
use crate::ode::{Dopri5, OdeOptions};
use crate::operator::{OperatorMatrix, ZERO};
use crate::trajectory::CollapseSet;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MasterOptions {
    pub ode: OdeOptions,
    /// Uniform output samples over `[t_start, t_end]` (inclusive).
    pub samples: usize,
    /// Allowed `|tr rho - 1|` at any output time.
    pub trace_tolerance: f64,
    /// Upper bound on the number of basis states the solution may touch.
    pub max_dim: usize,
}

impl Default for MasterOptions {
    fn default() -> Self {
        MasterOptions { ode: OdeOptions::default(), samples: 400, trace_tolerance: 1e-6, max_dim: 1200 }
    }
}

#[derive(Debug, Clone)]
pub struct MasterSolution {
    pub times: Vec<f64>,
    /// `populations[step][state]` over the full basis.
    pub populations: Vec<Vec<f64>>,
    pub traces: Vec<f64>,
    /// Density matrix at `t_end`.
    pub final_density: OperatorMatrix,
}

impl MasterSolution {
    pub fn final_population(&self, index: usize) -> f64 {
        self.populations.last().map_or(0.0, |p| p[index])
    }
}

/// Local triplets of an operator block `target <- source`.
type Block = Vec<(usize, usize, Complex64)>;

struct RhoBlock {
    rows: usize,
    cols: usize,
    offset: usize,
    row_sector: usize,
    col_sector: usize,
}

struct JumpTerm {
    src: usize,
    dst: usize,
    left: usize,
    right: usize,
}

struct Layout {
    blocks: Vec<RhoBlock>,
    sector_ops: BTreeMap<usize, PulsedOperator>,
    members: BTreeMap<usize, Vec<usize>>,
    op_blocks: Vec<Block>,
    jumps: Vec<JumpTerm>,
    len: usize,
}

fn restrict_rect(op: &OperatorMatrix, rows: &[usize], cols: &[usize]) -> Block {
    let mut local_col = BTreeMap::new();
    for (k, &c) in cols.iter().enumerate() {
        local_col.insert(c, k);
    }
    let mut out = Vec::new();
    for (lr, &r) in rows.iter().enumerate() {
        for (c, v) in op.row(r) {
            if let Some(&lc) = local_col.get(&c) {
                out.push((lr, lc, v));
            }
        }
    }
    out
}

fn build_layout(ham: &Hamiltonian, collapse: &CollapseSet, initial_sectors: &[usize], max_dim: usize) -> Result<Layout> {
    let sectors = ham.sectors();
    let h_eff = ham.pulsed_h_eff();
    let mut index: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for &a in initial_sectors {
        for &b in initial_sectors {
            index.insert((a, b), pairs.len());
            pairs.push((a, b));
        }
    }
    let mut images: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    let mut op_index: BTreeMap<(usize, usize, usize), usize> = BTreeMap::new();
    let mut op_blocks: Vec<Block> = Vec::new();
    let mut jumps = Vec::new();
    let mut touched: BTreeMap<usize, ()> = BTreeMap::new();
    let mut k = 0;
    while k < pairs.len() {
        let (c, d) = pairs[k];
        touched.insert(c, ());
        touched.insert(d, ());
        let dim: usize = touched.keys().map(|&s| sectors.members(s).len()).sum();
        if dim > max_dim {
            return Err(domain!("master equation would touch {dim} basis states, above the limit {max_dim}"));
        }
        for (ci, ch) in collapse.channels.iter().enumerate() {
            let img_c = images.entry((ci, c)).or_insert_with(|| sectors.image(&ch.op, c)).clone();
            let img_d = images.entry((ci, d)).or_insert_with(|| sectors.image(&ch.op, d)).clone();
            for &a in &img_c {
                for &b in &img_d {
                    let dst = *index.entry((a, b)).or_insert_with(|| {
                        pairs.push((a, b));
                        pairs.len() - 1
                    });
                    let mut op_id = |to: usize, from: usize| {
                        *op_index.entry((ci, to, from)).or_insert_with(|| {
                            op_blocks.push(restrict_rect(&ch.op, sectors.members(to), sectors.members(from)));
                            op_blocks.len() - 1
                        })
                    };
                    let left = op_id(a, c);
                    let right = op_id(b, d);
                    jumps.push(JumpTerm { src: k, dst, left, right });
                }
            }
        }
        k += 1;
    }
    let mut blocks = Vec::with_capacity(pairs.len());
    let mut offset = 0;
    for &(a, b) in &pairs {
        let (rows, cols) = (sectors.members(a).len(), sectors.members(b).len());
        blocks.push(RhoBlock { rows, cols, offset, row_sector: a, col_sector: b });
        offset += rows * cols;
    }
    let mut sector_ops = BTreeMap::new();
    let mut members = BTreeMap::new();
    for &s in touched.keys() {
        sector_ops.insert(s, h_eff.restrict(sectors.members(s)));
        members.insert(s, sectors.members(s).to_vec());
    }
    Ok(Layout { blocks, sector_ops, members, op_blocks, jumps, len: offset })
}

impl Layout {
    fn rhs(&self, g: f64, omega: f64, rho: &[Complex64], out: &mut [Complex64], scratch: &mut Vec<Complex64>) {
        let mi = Complex64::new(0.0, -1.0);
        for b in &self.blocks {
            let x = &rho[b.offset..b.offset + b.rows * b.cols];
            let y = &mut out[b.offset..b.offset + b.rows * b.cols];
            y.iter_mut().for_each(|z| *z = ZERO);
            // -i H_a X
            self.sector_ops[&b.row_sector].for_each_entry(g, omega, |r, c, w| {
                let w = w * mi;
                let (yr, xc) = (r * b.cols, c * b.cols);
                for j in 0..b.cols {
                    y[yr + j] += w * x[xc + j];
                }
            });
            // +i X H_b'
            self.sector_ops[&b.col_sector].for_each_entry(g, omega, |c, k, w| {
                let w = -(w.conj() * mi);
                for r in 0..b.rows {
                    y[r * b.cols + c] += x[r * b.cols + k] * w;
                }
            });
        }
        for j in &self.jumps {
            let (s, d) = (&self.blocks[j.src], &self.blocks[j.dst]);
            let x = &rho[s.offset..s.offset + s.rows * s.cols];
            // T = C_left X  (d.rows x s.cols)
            scratch.clear();
            scratch.resize(d.rows * s.cols, ZERO);
            for &(r, c, w) in &self.op_blocks[j.left] {
                for q in 0..s.cols {
                    scratch[r * s.cols + q] += w * x[c * s.cols + q];
                }
            }
            // out += T C_right'
            let y = &mut out[d.offset..d.offset + d.rows * d.cols];
            for &(c, k, w) in &self.op_blocks[j.right] {
                let w = w.conj();
                for r in 0..d.rows {
                    y[r * d.cols + c] += scratch[r * s.cols + k] * w;
                }
            }
        }
    }

    fn diagonal_into(&self, rho: &[Complex64], probs: &mut [f64]) -> f64 {
        probs.iter_mut().for_each(|p| *p = 0.0);
        let mut trace = 0.0;
        for b in self.blocks.iter().filter(|b| b.row_sector == b.col_sector) {
            for (k, &i) in self.members[&b.row_sector].iter().enumerate() {
                let p = rho[b.offset + k * b.cols + k].re;
                probs[i] = p;
                trace += p;
            }
        }
        trace
    }

    fn density(&self, dim: usize, rho: &[Complex64]) -> OperatorMatrix {
        let mut entries = Vec::new();
        for b in &self.blocks {
            let (ra, cb) = (&self.members[&b.row_sector], &self.members[&b.col_sector]);
            for (r, &gr) in ra.iter().enumerate() {
                for (c, &gc) in cb.iter().enumerate() {
                    let z = rho[b.offset + r * b.cols + c];
                    if z != ZERO {
                        entries.push((gr, gc, z));
                    }
                }
            }
        }
        OperatorMatrix::from_triplets(dim, entries)
    }
}

/// Integrates the master equation for the configuration's initial pure state.
pub fn solve_master_equation(ham: &Hamiltonian, collapse: &CollapseSet, opts: MasterOptions) -> Result<MasterSolution> {
    let cfg = ham.config();
    cfg.validate()?;
    if opts.samples < 2 {
        return Err(domain!("need at least 2 output samples, got {}", opts.samples));
    }
    let basis = ham.basis();
    let dim = basis.dim();
    if collapse.channels.iter().any(|c| c.op.dim() != dim) {
        return Err(Error::Config("collapse operator dimension differs from the basis".into()));
    }
    let psi = cfg.initial_vector(basis)?;
    let sectors = ham.sectors();
    let initial_sectors = sectors.support(psi.as_slice());
    let layout = build_layout(ham, collapse, &initial_sectors, opts.max_dim)?;

    let mut rho = vec![ZERO; layout.len];
    for b in &layout.blocks {
        let (ra, cb) = (&layout.members[&b.row_sector], &layout.members[&b.col_sector]);
        for (r, &gr) in ra.iter().enumerate() {
            for (c, &gc) in cb.iter().enumerate() {
                rho[b.offset + r * b.cols + c] = psi[gr] * psi[gc].conj();
            }
        }
    }

    let n = opts.samples;
    let times: Vec<f64> = (0..n).map(|k| cfg.t_start + (cfg.t_end - cfg.t_start) * k as f64 / (n - 1) as f64).collect();
    let mut populations = Vec::with_capacity(n);
    let mut traces = Vec::with_capacity(n);
    let mut probs = vec![0.0; dim];
    let mut record = |step: usize, rho: &[Complex64], populations: &mut Vec<Vec<f64>>, traces: &mut Vec<f64>| -> Result<()> {
        let tr = layout.diagonal_into(rho, &mut probs);
        if (tr - 1.0).abs() > opts.trace_tolerance {
            return Err(numerical!("trace drifted to {tr} at t={}", times[step]));
        }
        populations.push(probs.clone());
        traces.push(tr);
        Ok(())
    };
    record(0, &rho, &mut populations, &mut traces)?;

    let mut scratch = Vec::new();
    let mut f = |t: f64, x: &[Complex64], dx: &mut [Complex64]| {
        let (g, omega) = cfg.coupling(t);
        layout.rhs(g, omega, x, dx, &mut scratch);
    };
    let mut ode = Dopri5::new(layout.len, opts.ode);
    for step in 1..n {
        ode.integrate(&mut f, times[step - 1], &mut rho, times[step])?;
        record(step, &rho, &mut populations, &mut traces)?;
    }
    let final_density = layout.density(dim, &rho);
    Ok(MasterSolution { times, populations, traces, final_density })
}
