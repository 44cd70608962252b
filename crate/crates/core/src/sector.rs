//! The fixed-(S, M) excitation sector of the Tavis-Cummings Hamiltonian
//! `H = Δ S^z + g (b† S⁻ + b S⁺)`.
//!
//! Basis states are labelled by `k`, the number of spin excitations:
//! `|k⟩ = |n_b = M − k, S^z = k − S⟩`, `k = 0 ..= min(M, 2S)`. In this basis
//! the Hamiltonian is real symmetric tridiagonal.

use crate::error::{Error, Result};
use crate::scalar::{real, vec_norm, Cplx, Real};

/// Sector and drive definition.
///
/// The spin magnitude is stored as the integer `2S` so half-integer spins are
/// represented exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectorParams<T> {
    two_s: usize,
    m: usize,
    g: T,
    delta0: T,
    omega: T,
}

impl<T: Real> SectorParams<T> {
    pub fn new(two_s: usize, m: usize, g: T, delta0: T, omega: T) -> Result<Self> {
        if !(g > T::zero()) || !g.is_finite() {
            return Err(Error::InvalidParams(format!("coupling g must be positive, got {g}")));
        }
        if !(omega > T::zero()) || !omega.is_finite() {
            return Err(Error::InvalidParams(format!(
                "drive frequency must be positive, got {omega}"
            )));
        }
        if !delta0.is_finite() {
            return Err(Error::InvalidParams("drive amplitude must be finite".into()));
        }
        Ok(Self {
            two_s,
            m,
            g,
            delta0,
            omega,
        })
    }

    /// Builds parameters from a real spin value, which must be a non-negative
    /// multiple of 1/2.
    pub fn from_spin(spin: T, m: usize, g: T, delta0: T, omega: T) -> Result<Self> {
        let twice = spin + spin;
        let rounded = twice.round();
        if spin < T::zero() || (twice - rounded).abs() > T::lit(1e-9) {
            return Err(Error::InvalidParams(format!(
                "spin must be a non-negative half-integer, got {spin}"
            )));
        }
        let two_s = rounded
            .to_usize()
            .ok_or_else(|| Error::InvalidParams("spin too large".into()))?;
        Self::new(two_s, m, g, delta0, omega)
    }

    /// `2S`.
    pub fn two_s(&self) -> usize {
        self.two_s
    }

    /// `S` as a scalar.
    pub fn spin(&self) -> T {
        T::from_usize_exact(self.two_s) / T::lit(2.0)
    }

    /// Excitation number `M`.
    pub fn excitations(&self) -> usize {
        self.m
    }

    pub fn coupling(&self) -> T {
        self.g
    }

    pub fn delta0(&self) -> T {
        self.delta0
    }

    pub fn omega(&self) -> T {
        self.omega
    }

    pub fn with_omega(&self, omega: T) -> Result<Self> {
        Self::new(self.two_s, self.m, self.g, self.delta0, omega)
    }

    pub fn with_delta0(&self, delta0: T) -> Result<Self> {
        Self::new(self.two_s, self.m, self.g, delta0, self.omega)
    }

    /// Whether a single Bethe product can represent every sector state.
    pub fn supports_rapidities(&self) -> bool {
        self.m <= self.two_s
    }

    pub(crate) fn require_rapidities(&self) -> Result<()> {
        if self.supports_rapidities() {
            Ok(())
        } else {
            Err(Error::UnsupportedSector {
                m: self.m,
                two_s: self.two_s,
            })
        }
    }
}

/// Number of basis states in the sector: `min(M, 2S) + 1`.
pub fn sector_dimension<T: Real>(params: &SectorParams<T>) -> usize {
    params.m.min(params.two_s) + 1
}

/// Real symmetric tridiagonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal<T> {
    /// Diagonal, length `d`.
    pub diag: Vec<T>,
    /// Off-diagonal, length `d − 1`; `off[k]` couples `k` and `k + 1`.
    pub off: Vec<T>,
}

impl<T: Real> Tridiagonal<T> {
    pub fn new(diag: Vec<T>, off: Vec<T>) -> Result<Self> {
        if diag.is_empty() || off.len() + 1 != diag.len() {
            return Err(Error::DimensionMismatch {
                expected: diag.len().saturating_sub(1),
                got: off.len(),
            });
        }
        Ok(Self { diag, off })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Entry `(i, j)`; zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> T {
        match i.abs_diff(j) {
            0 => self.diag[i],
            1 => self.off[i.min(j)],
            _ => T::zero(),
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let d = self.dim();
        (0..d).map(|i| (0..d).map(|j| self.get(i, j)).collect()).collect()
    }

    /// Frobenius norm.
    pub fn norm(&self) -> T {
        let two = T::lit(2.0);
        let s: T = self.diag.iter().map(|&x| x * x).sum::<T>() + two * self.off.iter().map(|&x| x * x).sum::<T>();
        s.sqrt()
    }

    /// Writes `H v` into `out`.
    pub fn apply_into(&self, v: &[Cplx<T>], out: &mut [Cplx<T>]) {
        let d = self.dim();
        for k in 0..d {
            let mut acc = v[k] * self.diag[k];
            if k > 0 {
                acc += v[k - 1] * self.off[k - 1];
            }
            if k + 1 < d {
                acc += v[k + 1] * self.off[k];
            }
            out[k] = acc;
        }
    }

    pub fn apply(&self, v: &[Cplx<T>]) -> Result<Vec<Cplx<T>>> {
        check_dim(self.dim(), v.len())?;
        let mut out = vec![real(T::zero()); v.len()];
        self.apply_into(v, &mut out);
        Ok(out)
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

/// Coupling between basis states `k` and `k + 1`:
/// `g · sqrt((M − k)(k + 1)(2S − k))`, from `b|n⟩ = √n|n−1⟩` and
/// `S⁺|S,m⟩ = √((S−m)(S+m+1))|S,m+1⟩` with `m = k − S`.
fn ladder_coupling<T: Real>(params: &SectorParams<T>, k: usize) -> T {
    let f = |n: usize| T::from_usize_exact(n);
    params.g * (f(params.m - k) * f(k + 1) * f(params.two_s - k)).sqrt()
}

/// Sector Hamiltonian at detuning `delta`.
pub fn build_hamiltonian<T: Real>(params: &SectorParams<T>, delta: T) -> Tridiagonal<T> {
    let d = sector_dimension(params);
    let s = params.spin();
    let diag = (0..d).map(|k| delta * (T::from_usize_exact(k) - s)).collect();
    let off = (0..d - 1).map(|k| ladder_coupling(params, k)).collect();
    Tridiagonal { diag, off }
}

/// Evolving wavefunction over the sector basis.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState<T> {
    pub amplitudes: Vec<Cplx<T>>,
    pub time: T,
}

impl<T: Real> QuantumState<T> {
    pub fn new(amplitudes: Vec<Cplx<T>>, time: T) -> Self {
        Self { amplitudes, time }
    }

    pub fn from_real(amplitudes: &[T], time: T) -> Self {
        Self {
            amplitudes: amplitudes.iter().map(|&a| real(a)).collect(),
            time,
        }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> T {
        vec_norm(&self.amplitudes)
    }

    /// Returns a unit-norm copy; errors on the null vector.
    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == T::zero() {
            return Err(Error::NullState);
        }
        Ok(Self {
            amplitudes: self.amplitudes.iter().map(|a| a / n).collect(),
            time: self.time,
        })
    }

    pub fn probabilities(&self) -> impl Iterator<Item = T> + '_ {
        self.amplitudes.iter().map(|a| a.norm_sqr())
    }
}

/// `⟨b†b⟩ = Σ_k |ψ_k|² (M − k)`.
pub fn boson_number<T: Real>(state: &QuantumState<T>, params: &SectorParams<T>) -> Result<T> {
    check_dim(sector_dimension(params), state.dim())?;
    Ok(state
        .probabilities()
        .enumerate()
        .map(|(k, p)| p * T::from_usize_exact(params.m - k))
        .sum())
}

/// `⟨S^z + S⟩ = Σ_k |ψ_k|² k`.
pub fn spin_excitation_number<T: Real>(state: &QuantumState<T>, params: &SectorParams<T>) -> Result<T> {
    check_dim(sector_dimension(params), state.dim())?;
    Ok(state
        .probabilities()
        .enumerate()
        .map(|(k, p)| p * T::from_usize_exact(k))
        .sum())
}

/// `⟨ψ|H|ψ⟩` for a (not necessarily normalized) state; the imaginary part
/// vanishes identically for a symmetric `H` and is discarded.
pub fn energy_expectation<T: Real>(state: &QuantumState<T>, h: &Tridiagonal<T>) -> Result<T> {
    check_dim(h.dim(), state.dim())?;
    let v = &state.amplitudes;
    let d = v.len();
    let mut e = T::zero();
    for k in 0..d {
        e += h.diag[k] * v[k].norm_sqr();
        if k + 1 < d {
            // 2 Re(conj(v_k) v_{k+1}) h_{k,k+1}
            let cross = v[k].re * v[k + 1].re + v[k].im * v[k + 1].im;
            e += T::lit(2.0) * h.off[k] * cross;
        }
    }
    Ok(e)
}
