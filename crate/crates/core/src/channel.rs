//! I.i.d. Rayleigh small-scale fading and the unquantized received block at
//! BS 0.

use ndarray::{Array2, Zip};
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::complex_normal_matrix;
use crate::waveform::TxFrame;

/// Fading towards BS 0 for all `K * L` users.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// `M x KL` small-scale fading, i.i.d. CN(0,1).
    pub h: Array2<Complex64>,
    /// Diagonal of `D0`, `sqrt(theta)` per user.
    pub d: Vec<f64>,
}

impl ChannelRealization {
    pub fn draw<R: Rng + ?Sized>(antennas: usize, amplitudes: Vec<f64>, rng: &mut R) -> Self {
        let h = complex_normal_matrix(antennas, amplitudes.len(), rng);
        Self { h, d: amplitudes }
    }

    pub fn antennas(&self) -> usize {
        self.h.nrows()
    }

    pub fn users(&self) -> usize {
        self.h.ncols()
    }

    /// The composite channel `H0 D0`.
    pub fn effective(&self) -> Array2<Complex64> {
        let mut g = self.h.clone();
        for (mut col, &d) in g.columns_mut().into_iter().zip(&self.d) {
            col.mapv_inplace(|z| z * d);
        }
        g
    }
}

/// The three terms of `Y0` kept apart so one fading/noise draw can be
/// reassembled for many power fractions.
#[derive(Debug, Clone)]
pub struct BlockComponents {
    /// `H0 D0 C`
    pub pilot: Array2<Complex64>,
    /// `H0 D0 S`
    pub data: Array2<Complex64>,
    /// `W0`
    pub noise: Array2<Complex64>,
}

impl BlockComponents {
    pub fn new(
        channel: &ChannelRealization,
        c: &Array2<Complex64>,
        s: &Array2<Complex64>,
        noise: Array2<Complex64>,
    ) -> Result<Self> {
        let (m, kl) = channel.h.dim();
        if c.nrows() != kl || s.dim() != c.dim() || noise.dim() != (m, c.ncols()) {
            return Err(Error::Shape(format!(
                "channel {:?}, pilots {:?}, data {:?}, noise {:?}",
                channel.h.dim(),
                c.dim(),
                s.dim(),
                noise.dim()
            )));
        }
        let g = channel.effective();
        Ok(Self { pilot: g.dot(c), data: g.dot(s), noise })
    }

    /// `Y0 = sqrt(alpha rho) H0 D0 C + sqrt((1 - alpha) rho) H0 D0 S + W0`.
    pub fn assemble(&self, alpha: f64, rho: f64) -> Array2<Complex64> {
        let a = (alpha * rho).sqrt();
        let b = ((1.0 - alpha) * rho).sqrt();
        Zip::from(&self.pilot)
            .and(&self.data)
            .and(&self.noise)
            .map_collect(|&p, &q, &w| p * a + q * b + w)
    }
}

/// Received block for a single transmit frame with fresh AWGN.
pub fn received_block<R: Rng + ?Sized>(
    channel: &ChannelRealization,
    frame: &TxFrame,
    rho: f64,
    rng: &mut R,
) -> Result<Array2<Complex64>> {
    if !(rho > 0.0) {
        return Err(Error::config("rho", "must be positive"));
    }
    let (m, kl) = channel.h.dim();
    if frame.x.nrows() != kl {
        return Err(Error::Shape(format!("channel has {kl} users, frame has {}", frame.x.nrows())));
    }
    let noise = complex_normal_matrix(m, frame.x.ncols(), rng);
    let mut y = channel.effective().dot(&frame.x);
    let scale = rho.sqrt();
    Zip::from(&mut y).and(&noise).for_each(|y, &w| *y = *y * scale + w);
    Ok(y)
}
