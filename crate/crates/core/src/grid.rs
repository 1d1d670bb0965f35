use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Box geometry, truncation sizes and norm parameters.
///
/// Horizontal wavenumbers are stored for `m` in `-nx/2+1 ..= nx/2` (likewise
/// `n`); the Nyquist slots `|m| = nx/2`, `|n| = ny/2` are kept identically
/// zero so that every stored field is exactly real. Vertical cosine modes run
/// over `k = 0 .. nz`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub length: f64,
    pub depth: f64,
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub m_sobolev: u32,
    pub delta: f64,
}

impl GridSpec {
    pub fn new(
        length: f64,
        depth: f64,
        nx: usize,
        ny: usize,
        nz: usize,
        m_sobolev: u32,
        delta: f64,
    ) -> Result<Self> {
        let g = GridSpec {
            length,
            depth,
            nx,
            ny,
            nz,
            m_sobolev,
            delta,
        };
        g.validate()?;
        Ok(g)
    }

    /// The desk-scale default: `L = h = 2π`, 16×16×9 modes, `m = 2`, `δ = 0.1`.
    pub fn desk() -> Self {
        GridSpec {
            length: 2.0 * PI,
            depth: 2.0 * PI,
            nx: 16,
            ny: 16,
            nz: 9,
            m_sobolev: 2,
            delta: 0.1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |s: &str| Err(Error::InvalidGrid(s.to_string()));
        if !(self.length > 0.0 && self.length.is_finite()) {
            return bad("L must be positive");
        }
        if !(self.depth > 0.0 && self.depth.is_finite()) {
            return bad("h must be positive");
        }
        if self.nx < 4 || !self.nx.is_multiple_of(2) {
            return bad("Nx must be even and >= 4");
        }
        if self.ny < 4 || !self.ny.is_multiple_of(2) {
            return bad("Ny must be even and >= 4");
        }
        if self.nz < 2 {
            return bad("Nz must be >= 2");
        }
        if self.m_sobolev < 2 {
            return bad("m_sobolev must be >= 2");
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return bad("delta must be positive");
        }
        Ok(())
    }

    pub fn volume(&self) -> f64 {
        self.length * self.length * self.depth
    }

    /// Horizontal wavenumber unit `2π/L`.
    pub fn kx_unit(&self) -> f64 {
        2.0 * PI / self.length
    }

    /// Vertical wavenumber unit `2π/h`.
    pub fn kz_unit(&self) -> f64 {
        2.0 * PI / self.depth
    }

    /// Eigenvalue of `-Δ` on `e^{2πi(mx+ny)/L} cos(2πkz/h)`.
    pub fn eigenvalue(&self, m: i64, n: i64, k: usize) -> f64 {
        let a = self.kx_unit();
        let b = self.kz_unit();
        a * a * (m * m + n * n) as f64 + b * b * (k * k) as f64
    }

    /// Largest stored horizontal wavenumber (Nyquist excluded).
    pub fn max_m(&self) -> i64 {
        self.nx as i64 / 2 - 1
    }

    pub fn max_n(&self) -> i64 {
        self.ny as i64 / 2 - 1
    }

    /// Points per period of the vertical collocation grid.
    pub fn nz_grid(&self) -> usize {
        2 * (self.nz - 1)
    }

    /// The 2/3-rule band used inside quadratic products.
    pub fn dealiased_band(&self) -> Band {
        Band {
            mx: ((self.nx - 1) / 3) as i64,
            ny: ((self.ny - 1) / 3) as i64,
            kz: (self.nz_grid() - 1) / 3,
        }
    }

    /// Every stored mode.
    pub fn full_band(&self) -> Band {
        Band {
            mx: self.max_m(),
            ny: self.max_n(),
            kz: self.nz - 1,
        }
    }

    /// Smallest eigenvalue over the retained basis.
    pub fn lambda1(&self) -> f64 {
        let a = self.kx_unit();
        let b = self.kz_unit();
        let horizontal = if self.max_m() >= 1 || self.max_n() >= 1 {
            a * a
        } else {
            f64::INFINITY
        };
        horizontal.min(b * b)
    }
}

/// Rectangular set of modes `|m| <= mx`, `|n| <= ny`, `k <= kz`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Band {
    pub mx: i64,
    pub ny: i64,
    pub kz: usize,
}

impl Band {
    pub fn contains(&self, m: i64, n: i64, k: usize) -> bool {
        m.abs() <= self.mx && n.abs() <= self.ny && k <= self.kz
    }

    pub fn width_m(&self) -> usize {
        (2 * self.mx + 1) as usize
    }

    pub fn width_n(&self) -> usize {
        (2 * self.ny + 1) as usize
    }

    pub fn depth_k(&self) -> usize {
        self.kz + 1
    }

    /// Number of `(m, n, k)` triples in the band.
    pub fn len(&self) -> usize {
        self.width_m() * self.width_n() * self.depth_k()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Compact index of `(m, n, k)`; ordering `m`, then `n`, then `k` fastest.
    #[inline]
    pub fn index(&self, m: i64, n: i64, k: usize) -> usize {
        (((m + self.mx) as usize * self.width_n()) + (n + self.ny) as usize) * self.depth_k() + k
    }
}
