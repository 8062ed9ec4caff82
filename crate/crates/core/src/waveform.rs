//! Pilot books, data symbols and the superimposed transmit frame.

use std::f64::consts::PI;

use ndarray::{Array2, Zip};
use num_complex::Complex64;
use rand::seq::{index, SliceRandom};
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::complex_normal_matrix;

/// Entry `(n, t)` of the `T`-point Fourier basis, `exp(-i 2 pi n t / T)`.
/// The product is reduced mod `T` first so large indices stay exact.
#[inline]
pub fn fourier_entry(n: usize, t: usize, len: usize) -> Complex64 {
    let phase = -2.0 * PI * ((n * t) % len) as f64 / len as f64;
    Complex64::from_polar(1.0, phase)
}

/// Orthogonal unit-modulus pilot sequences, one row per user in the order
/// `j * K + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotBook {
    pub c: Array2<Complex64>,
    /// Fourier row index used by each user.
    pub selected_rows: Vec<usize>,
}

impl PilotBook {
    pub fn users(&self) -> usize {
        self.c.nrows()
    }

    pub fn len(&self) -> usize {
        self.c.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }

    /// Book built from explicit Fourier rows of length `len`.
    pub fn from_rows(rows: Vec<usize>, len: usize) -> Self {
        let c = Array2::from_shape_fn((rows.len(), len), |(i, t)| fourier_entry(rows[i], t, len));
        Self { c, selected_rows: rows }
    }
}

/// Draws `users` distinct rows of the `len`-point Fourier basis uniformly
/// without replacement.
pub fn make_pilot_book<R: Rng + ?Sized>(users: usize, len: usize, rng: &mut R) -> Result<PilotBook> {
    if users > len {
        return Err(Error::PilotSupply { requested: users, available: len });
    }
    let rows = index::sample(rng, len, users).into_vec();
    Ok(PilotBook::from_rows(rows, len))
}

/// `users x len` matrix of i.i.d. CN(0,1) data symbols.
pub fn make_data<R: Rng + ?Sized>(users: usize, len: usize, rng: &mut R) -> Array2<Complex64> {
    complex_normal_matrix(users, len, rng)
}

/// Superimposed transmit symbols `x = sqrt(alpha) c + sqrt(1 - alpha) s`.
#[derive(Debug, Clone, PartialEq)]
pub struct TxFrame {
    pub x: Array2<Complex64>,
    pub s: Array2<Complex64>,
    pub alpha: f64,
}

pub fn superimpose(c: &Array2<Complex64>, s: &Array2<Complex64>, alpha: f64) -> Result<TxFrame> {
    if c.dim() != s.dim() {
        return Err(Error::Shape(format!("pilots {:?} vs data {:?}", c.dim(), s.dim())));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::config("alpha", format!("must lie in [0, 1], got {alpha}")));
    }
    let x = if alpha == 1.0 {
        c.clone()
    } else if alpha == 0.0 {
        s.clone()
    } else {
        let (a, b) = (alpha.sqrt(), (1.0 - alpha).sqrt());
        Zip::from(c).and(s).map_collect(|&c, &s| c * a + s * b)
    };
    Ok(TxFrame { x, s: s.clone(), alpha })
}

/// Time-multiplexed training: `tau = K` symbols, the `K`-point Fourier basis
/// reused in every cell with a random per-cell assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct QtpPilotBook {
    /// `KL x tau` training sequences in user order.
    pub c: Array2<Complex64>,
    /// Sequence index of each user.
    pub assignment: Vec<usize>,
    pub users_per_cell: usize,
}

impl QtpPilotBook {
    pub fn tau(&self) -> usize {
        self.c.ncols()
    }

    /// Users sharing the sequence of user `i`, including `i` itself.
    pub fn sharing(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        let seq = self.assignment[i];
        self.assignment.iter().enumerate().filter(move |(_, &a)| a == seq).map(|(u, _)| u)
    }
}

pub fn make_qtp_pilot_book<R: Rng + ?Sized>(users_per_cell: usize, cells: usize, rng: &mut R) -> QtpPilotBook {
    let k = users_per_cell;
    let mut assignment = Vec::with_capacity(k * cells);
    for _ in 0..cells {
        let mut perm: Vec<usize> = (0..k).collect();
        perm.shuffle(rng);
        assignment.extend(perm);
    }
    let c = Array2::from_shape_fn((k * cells, k), |(i, t)| fourier_entry(assignment[i], t, k));
    QtpPilotBook { c, assignment, users_per_cell }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedTree;

    fn gram(c: &Array2<Complex64>) -> Array2<Complex64> {
        c.dot(&c.t().mapv(|z| z.conj()))
    }

    #[test]
    fn pilot_book_is_orthogonal_and_unit_modulus() {
        let mut rng = SeedTree::new(1).stream();
        let book = make_pilot_book(84, 200, &mut rng).unwrap();
        assert!(book.c.iter().all(|z| (z.norm() - 1.0).abs() < 1e-14));
        let g = gram(&book.c);
        for i in 0..84 {
            for j in 0..84 {
                let target = if i == j { 200.0 } else { 0.0 };
                assert!((g[[i, j]] - target).norm() < 1e-9, "({i},{j}) = {}", g[[i, j]]);
            }
        }
        let mut rows = book.selected_rows.clone();
        rows.sort_unstable();
        rows.dedup();
        assert_eq!(rows.len(), 84);
    }

    #[test]
    fn full_book_is_a_permutation() {
        let mut rng = SeedTree::new(2).stream();
        let book = make_pilot_book(16, 16, &mut rng).unwrap();
        let mut rows = book.selected_rows.clone();
        rows.sort_unstable();
        assert_eq!(rows, (0..16).collect::<Vec<_>>());
        assert!(matches!(make_pilot_book(17, 16, &mut rng), Err(Error::PilotSupply { .. })));
    }

    #[test]
    fn pilot_book_regenerates_bitwise() {
        let a = make_pilot_book(20, 50, &mut SeedTree::new(9).stream()).unwrap();
        let b = make_pilot_book(20, 50, &mut SeedTree::new(9).stream()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn superposition_limits_and_power() {
        let mut rng = SeedTree::new(4).stream();
        let book = make_pilot_book(10, 100, &mut rng).unwrap();
        let s = make_data(10, 100, &mut rng);
        assert_eq!(superimpose(&book.c, &s, 1.0).unwrap().x, book.c);
        assert_eq!(superimpose(&book.c, &s, 0.0).unwrap().x, s);
        assert!(superimpose(&book.c, &s, 1.5).is_err());
        assert!(superimpose(&book.c, &s.slice(ndarray::s![..5, ..]).to_owned(), 0.5).is_err());

        let book = make_pilot_book(100, 10_000, &mut rng).unwrap();
        let s = make_data(100, 10_000, &mut rng);
        let f = superimpose(&book.c, &s, 0.5).unwrap();
        let p = f.x.iter().map(|z| z.norm_sqr()).sum::<f64>() / f.x.len() as f64;
        assert!((p - 1.0).abs() < 0.01, "power {p}");
    }

    #[test]
    fn data_statistics() {
        let s = make_data(1000, 1000, &mut SeedTree::new(8).stream());
        let n = s.len() as f64;
        let var = s.iter().map(|z| z.norm_sqr()).sum::<f64>() / n;
        let mean = s.iter().sum::<Complex64>() / n;
        let cross = s.iter().map(|z| z.re * z.im).sum::<f64>() / n;
        assert!((var - 1.0).abs() < 0.01);
        // 3 sigma for a mean of n unit-variance samples
        assert!(mean.norm() < 3.0 / n.sqrt());
        assert!(cross.abs() < 3.0 * 0.5 / n.sqrt());
    }

    #[test]
    fn qtp_book_is_orthogonal_within_each_cell() {
        let book = make_qtp_pilot_book(12, 7, &mut SeedTree::new(3).stream());
        assert_eq!(book.c.dim(), (84, 12));
        for j in 0..7 {
            let mut seqs = book.assignment[j * 12..(j + 1) * 12].to_vec();
            seqs.sort_unstable();
            assert_eq!(seqs, (0..12).collect::<Vec<_>>());
        }
        assert_eq!(book.sharing(0).count(), 7);
        let cell = book.c.slice(ndarray::s![0..12, ..]).to_owned();
        let g = gram(&cell);
        for i in 0..12 {
            assert!((g[[i, i]] - 12.0).norm() < 1e-12);
            for j in 0..12 {
                if i != j {
                    assert!(g[[i, j]].norm() < 1e-9);
                }
            }
        }
    }
}
