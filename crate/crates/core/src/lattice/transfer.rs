//! Column-by-column transfer-matrix summation for two-dimensional boxes.
//!
//! The state is the spin pattern of one column (bit `r` = row `r`). The
//! inter-column kernel `exp(β Σ_r s_r s'_r)` factorizes over rows and is
//! applied as `H` butterfly passes, so one column step costs `O(H·2^H)`.
//! Magnetizations come from forward/backward vectors with √N checkpointing.

use super::spins::low_mask32;

/// Largest column height the transfer path accepts.
pub const MAX_HEIGHT: usize = 20;
/// Largest number of columns.
pub const MAX_COLUMNS: usize = 10_000;

#[derive(Clone, Debug)]
pub(crate) struct TransferSystem {
    cols: usize,
    height: usize,
    beta: f64,
    /// `field[c][r]`: linear coefficient of `s_{c,r}` in the log-weight.
    field: Vec<Vec<f64>>,
    intra: Vec<i32>,
}

/// A vector stored as `v · exp(log_scale)`.
#[derive(Clone, Debug)]
struct Scaled {
    v: Vec<f64>,
    log_scale: f64,
}

impl Scaled {
    fn normalize(&mut self) {
        let m = self.v.iter().cloned().fold(0.0f64, f64::max);
        if m > 0.0 {
            self.v.iter_mut().for_each(|x| *x /= m);
            self.log_scale += m.ln();
        }
    }
}

impl TransferSystem {
    pub fn new(beta: f64, field: Vec<Vec<f64>>) -> Self {
        let cols = field.len();
        let height = field.first().map_or(0, |c| c.len());
        assert!(cols >= 1 && (1..=MAX_HEIGHT).contains(&height));
        assert!(field.iter().all(|c| c.len() == height));
        let pair_mask = low_mask32(height - 1);
        let intra = (0u32..1 << height)
            .map(|s| (height as i32 - 1) - 2 * ((s ^ (s >> 1)) & pair_mask).count_ones() as i32)
            .collect();
        TransferSystem {
            cols,
            height,
            beta,
            field,
            intra,
        }
    }

    /// Column weights `exp(β·intra(s) + Σ_r f_{c,r} s_r)` as a scaled vector.
    fn column_weights(&self, c: usize) -> Scaled {
        let h = self.height;
        let split = h / 2;
        let f = &self.field[c];
        let table = |lo: usize, hi: usize| -> Vec<f64> {
            (0u32..1 << (hi - lo))
                .map(|p| {
                    (lo..hi)
                        .map(|r| if p >> (r - lo) & 1 == 1 { f[r] } else { -f[r] })
                        .sum()
                })
                .collect()
        };
        let (lo, hi) = (table(0, split), table(split, h));
        let lo_mask = low_mask32(split);
        let lw: Vec<f64> = (0u32..1 << h)
            .map(|s| {
                self.beta * self.intra[s as usize] as f64
                    + lo[(s & lo_mask) as usize]
                    + hi[(s >> split) as usize]
            })
            .collect();
        let m = lw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Scaled {
            v: lw.iter().map(|x| (x - m).exp()).collect(),
            log_scale: m,
        }
    }

    /// Applies the symmetric inter-column kernel in place.
    fn apply_kernel(&self, x: &mut Scaled) {
        let t = (-2.0 * self.beta).exp();
        for r in 0..self.height {
            let bit = 1usize << r;
            for a in 0..x.v.len() {
                if a & bit == 0 {
                    let b = a | bit;
                    let (va, vb) = (x.v[a], x.v[b]);
                    x.v[a] = va + t * vb;
                    x.v[b] = t * va + vb;
                }
            }
        }
        x.log_scale += self.beta * self.height as f64;
        x.normalize();
    }

    fn pointwise(mut x: Scaled, w: &Scaled) -> Scaled {
        x.v.iter_mut().zip(&w.v).for_each(|(a, b)| *a *= b);
        x.log_scale += w.log_scale;
        x.normalize();
        x
    }

    fn forward_step(&self, mut f: Scaled, c: usize) -> Scaled {
        self.apply_kernel(&mut f);
        Self::pointwise(f, &self.column_weights(c))
    }

    fn backward_step(&self, b: Scaled, c: usize) -> Scaled {
        let mut x = Self::pointwise(b, &self.column_weights(c));
        self.apply_kernel(&mut x);
        x
    }

    fn first(&self) -> Scaled {
        let mut f = self.column_weights(0);
        f.normalize();
        f
    }

    pub fn log_partition(&self) -> f64 {
        let mut f = self.first();
        for c in 1..self.cols {
            f = self.forward_step(f, c);
        }
        f.log_scale + f.v.iter().sum::<f64>().ln()
    }

    /// Log-partition and magnetizations indexed `[column][row]`.
    pub fn moments(&self) -> (f64, Vec<Vec<f64>>) {
        let seg = ((self.cols as f64).sqrt().ceil() as usize).max(1);
        let mut checkpoints = Vec::new();
        let mut f = self.first();
        for c in 0..self.cols {
            if c % seg == 0 {
                checkpoints.push(f.clone());
            }
            if c + 1 < self.cols {
                f = self.forward_step(f, c + 1);
            }
        }
        let log_z = f.log_scale + f.v.iter().sum::<f64>().ln();

        let mut mag = vec![vec![0.0; self.height]; self.cols];
        let mut b = Scaled {
            v: vec![1.0; 1 << self.height],
            log_scale: 0.0,
        };
        for (k, cp) in checkpoints.into_iter().enumerate().rev() {
            let start = k * seg;
            let end = (start + seg).min(self.cols);
            let mut fs = vec![cp];
            for c in start + 1..end {
                let next = self.forward_step(fs.last().unwrap().clone(), c);
                fs.push(next);
            }
            for c in (start..end).rev() {
                mag[c] = self.column_magnetization(&fs[c - start], &b);
                if c > 0 {
                    b = self.backward_step(b, c);
                }
            }
        }
        (log_z, mag)
    }

    fn column_magnetization(&self, f: &Scaled, b: &Scaled) -> Vec<f64> {
        let mut total = 0.0;
        let mut plus = vec![0.0; self.height];
        for (s, (x, y)) in f.v.iter().zip(&b.v).enumerate() {
            let p = x * y;
            total += p;
            for (r, acc) in plus.iter_mut().enumerate() {
                if s >> r & 1 == 1 {
                    *acc += p;
                }
            }
        }
        plus.iter().map(|&p| (2.0 * p - total) / total).collect()
    }
}
