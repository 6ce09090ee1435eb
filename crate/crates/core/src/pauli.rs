//! Symplectic representation of Pauli strings and real-weighted Pauli sums.
//!
//! A string on n qubits is stored as two bit words (x, z) plus a power of i:
//! the operator is i^phase * prod_q X_q^{x_q} Z_q^{z_q}, with qubit 0 the
//! leftmost tensor factor in labels like "XIZY". The canonical Hermitian
//! string with Y = iXZ on each (x_q, z_q) = (1, 1) site carries
//! phase = (number of Y sites) mod 4.
//!
//! Bit conventions: qubit q lives at bit q of `x`/`z`; computational-basis
//! indices put qubit 0 at the most significant bit, so ket routines reverse
//! the low n bits once up front.

use nalgebra::{DMatrix, DVector};

use crate::{C64, Error, Result};

/// Maximum supported qubit count (4^n Pauli enumeration stays tractable).
pub const MAX_QUBITS: usize = 16;

const I_POW: [C64; 4] = [
    C64::new(1.0, 0.0),
    C64::new(0.0, 1.0),
    C64::new(-1.0, 0.0),
    C64::new(0.0, -1.0),
];

/// A Pauli string with tracked phase: i^phase * X^x Z^z.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliString {
    n: usize,
    x: u32,
    z: u32,
    phase: u8,
}

impl PauliString {
    /// Canonical Hermitian string from symplectic bits (Y where both set).
    pub fn canonical(n: usize, x: u32, z: u32) -> Result<Self> {
        check_qubits(n)?;
        let mask = word_mask(n);
        if x & !mask != 0 || z & !mask != 0 {
            return Err(Error::Config(format!(
                "symplectic bits exceed {n} qubits"
            )));
        }
        Ok(Self { n, x, z, phase: ((x & z).count_ones() % 4) as u8 })
    }

    /// Identity on n qubits.
    pub fn identity(n: usize) -> Self {
        Self::canonical(n, 0, 0).expect("identity within qubit cap")
    }

    /// Single-qubit X at position q (0 = leftmost).
    pub fn x_on(n: usize, q: usize) -> Self {
        Self::canonical(n, 1 << q, 0).expect("single-site within cap")
    }

    /// Single-qubit Y at position q.
    pub fn y_on(n: usize, q: usize) -> Self {
        Self::canonical(n, 1 << q, 1 << q).expect("single-site within cap")
    }

    /// Single-qubit Z at position q.
    pub fn z_on(n: usize, q: usize) -> Self {
        Self::canonical(n, 0, 1 << q).expect("single-site within cap")
    }

    /// Parse a label like "XIZY", optionally prefixed by "+", "-", "+i", "-i".
    pub fn parse(label: &str) -> Result<Self> {
        let s = label.trim();
        let (prefix_phase, rest) = if let Some(r) = s.strip_prefix("-i") {
            (3u8, r)
        } else if let Some(r) = s.strip_prefix("+i") {
            (1u8, r)
        } else if let Some(r) = s.strip_prefix('-') {
            (2u8, r)
        } else if let Some(r) = s.strip_prefix('+') {
            (0u8, r)
        } else {
            (0u8, s)
        };
        let n = rest.chars().count();
        check_qubits(n)?;
        let mut x = 0u32;
        let mut z = 0u32;
        for (q, ch) in rest.chars().enumerate() {
            match ch.to_ascii_uppercase() {
                'I' => {}
                'X' => x |= 1 << q,
                'Y' => {
                    x |= 1 << q;
                    z |= 1 << q;
                }
                'Z' => z |= 1 << q,
                other => {
                    return Err(Error::Config(format!(
                        "invalid Pauli letter {other:?} in {label:?}"
                    )))
                }
            }
        }
        let mut p = Self::canonical(n, x, z)?;
        p.phase = (p.phase + prefix_phase) % 4;
        Ok(p)
    }

    /// Canonical index in [0, 4^n): lexicographic over (z_bits, x_bits), so
    /// the identity sits at 0 and single-qubit order is I, X, Z, Y. Ignores
    /// the phase.
    pub fn index(&self) -> usize {
        ((self.z as usize) << self.n) | self.x as usize
    }

    /// Canonical Hermitian string from its [`index`](Self::index).
    pub fn from_index(n: usize, idx: usize) -> Result<Self> {
        check_qubits(n)?;
        if idx >= 1 << (2 * n) {
            return Err(Error::Config(format!("Pauli index {idx} out of range")));
        }
        let x = (idx as u32) & word_mask(n);
        let z = (idx >> n) as u32;
        Self::canonical(n, x, z)
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn x_bits(&self) -> u32 {
        self.x
    }

    pub fn z_bits(&self) -> u32 {
        self.z
    }

    /// Phase exponent e with the operator equal to i^e X^x Z^z.
    pub fn phase_exponent(&self) -> u8 {
        self.phase
    }

    /// True when the tracked phase equals the canonical Hermitian one.
    pub fn is_canonical(&self) -> bool {
        self.phase == ((self.x & self.z).count_ones() % 4) as u8
    }

    /// Same symplectic content with the canonical Hermitian phase.
    pub fn canonicalized(&self) -> Self {
        Self::canonical(self.n, self.x, self.z).expect("bits already checked")
    }

    /// Number of non-identity sites.
    pub fn weight(&self) -> u32 {
        (self.x | self.z).count_ones()
    }

    /// Number of sites with an X component (X or Y); the bit-flip weight.
    pub fn x_weight(&self) -> u32 {
        self.x.count_ones()
    }

    /// Operator product, phase tracked exactly.
    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.n, rhs.n, "qubit count mismatch in Pauli product");
        // Z^{z1} past X^{x2} costs (-1)^{|z1 & x2|} = i^{2|z1 & x2|}.
        let swap = 2 * (self.z & rhs.x).count_ones();
        Self {
            n: self.n,
            x: self.x ^ rhs.x,
            z: self.z ^ rhs.z,
            phase: ((self.phase as u32 + rhs.phase as u32 + swap) % 4) as u8,
        }
    }

    /// Hermitian adjoint.
    pub fn dagger(&self) -> Self {
        // (i^e X^x Z^z)^dag = i^{-e} (-1)^{|x & z|} X^x Z^z
        let e = (4 - self.phase as u32 + 2 * (self.x & self.z).count_ones()) % 4;
        Self { phase: e as u8, ..*self }
    }

    /// True when the two strings commute as operators.
    pub fn commutes_with(&self, rhs: &Self) -> bool {
        ((self.x & rhs.z).count_ones() + (self.z & rhs.x).count_ones()) % 2 == 0
    }

    /// +1 when commuting with rhs, -1 when anticommuting.
    pub fn eta(&self, rhs: &Self) -> f64 {
        if self.commutes_with(rhs) {
            1.0
        } else {
            -1.0
        }
    }

    /// Basis-state action: G |b> = factor * |b ^ flip> in computational
    /// indices (qubit 0 = most significant bit).
    pub fn ket_action(&self, b: usize) -> (C64, usize) {
        let xr = reverse_low_bits(self.x, self.n) as usize;
        let zr = reverse_low_bits(self.z, self.n) as usize;
        let sign = (b & zr).count_ones() % 2;
        (I_POW[((self.phase as u32 + 2 * sign) % 4) as usize], b ^ xr)
    }

    /// phi = G psi.
    pub fn apply(&self, psi: &DVector<C64>) -> DVector<C64> {
        let dim = 1usize << self.n;
        assert_eq!(psi.len(), dim, "state dimension mismatch");
        let xr = reverse_low_bits(self.x, self.n) as usize;
        let zr = reverse_low_bits(self.z, self.n) as usize;
        let mut phi = DVector::zeros(dim);
        for b in 0..dim {
            let sign = (b & zr).count_ones() % 2;
            let f = I_POW[((self.phase as u32 + 2 * sign) % 4) as usize];
            phi[b ^ xr] += f * psi[b];
        }
        phi
    }

    /// <psi| G |psi>.
    pub fn expectation(&self, psi: &DVector<C64>) -> C64 {
        let dim = 1usize << self.n;
        assert_eq!(psi.len(), dim, "state dimension mismatch");
        let xr = reverse_low_bits(self.x, self.n) as usize;
        let zr = reverse_low_bits(self.z, self.n) as usize;
        let mut acc = C64::new(0.0, 0.0);
        for b in 0..dim {
            let sign = (b & zr).count_ones() % 2;
            let f = I_POW[((self.phase as u32 + 2 * sign) % 4) as usize];
            acc += psi[b ^ xr].conj() * f * psi[b];
        }
        acc
    }

    /// Dense 2^n x 2^n matrix.
    pub fn matrix(&self) -> DMatrix<C64> {
        let dim = 1usize << self.n;
        let mut m = DMatrix::zeros(dim, dim);
        for b in 0..dim {
            let (f, b2) = self.ket_action(b);
            m[(b2, b)] = f;
        }
        m
    }

    /// Tensor this string (as the left factor) with another.
    pub fn tensor(&self, rhs: &Self) -> Self {
        let n = self.n + rhs.n;
        assert!(n <= MAX_QUBITS, "tensor product exceeds qubit cap");
        Self {
            n,
            x: self.x | (rhs.x << self.n),
            z: self.z | (rhs.z << self.n),
            phase: (self.phase + rhs.phase) % 4,
        }
    }

    /// Embed into a larger register, placing qubit q of self at
    /// `positions[q]` and identity elsewhere.
    pub fn embed(&self, n_total: usize, positions: &[usize]) -> Result<Self> {
        check_qubits(n_total)?;
        if positions.len() != self.n {
            return Err(Error::Dimension { expected: self.n, got: positions.len() });
        }
        let mut x = 0u32;
        let mut z = 0u32;
        for (q, &p) in positions.iter().enumerate() {
            if p >= n_total {
                return Err(Error::Config(format!(
                    "embed position {p} outside register of {n_total}"
                )));
            }
            x |= ((self.x >> q) & 1) << p;
            z |= ((self.z >> q) & 1) << p;
        }
        Ok(Self { n: n_total, x, z, phase: self.phase })
    }

    /// Read the letters at `positions` as a canonical Hermitian string on
    /// positions.len() qubits (inverse of embed on that subset).
    pub fn restricted(&self, positions: &[usize]) -> Result<Self> {
        if positions.is_empty() || positions.len() > self.n {
            return Err(Error::Config(format!(
                "cannot restrict {}-qubit string to {} positions",
                self.n,
                positions.len()
            )));
        }
        let mut x = 0u32;
        let mut z = 0u32;
        for (q, &p) in positions.iter().enumerate() {
            if p >= self.n {
                return Err(Error::Config(format!(
                    "restrict position {p} outside register of {}",
                    self.n
                )));
            }
            x |= ((self.x >> p) & 1) << q;
            z |= ((self.z >> p) & 1) << q;
        }
        Self::canonical(positions.len(), x, z)
    }
}

impl std::fmt::Display for PauliString {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let canonical = ((self.x & self.z).count_ones() % 4) as u8;
        let leftover = (4 + self.phase - canonical) % 4;
        f.write_str(["", "+i", "-", "-i"][leftover as usize])?;
        for q in 0..self.n {
            let xq = (self.x >> q) & 1;
            let zq = (self.z >> q) & 1;
            f.write_str(match (xq, zq) {
                (0, 0) => "I",
                (1, 0) => "X",
                (1, 1) => "Y",
                (0, 1) => "Z",
                _ => unreachable!(),
            })?;
        }
        Ok(())
    }
}

impl std::fmt::Debug for PauliString {
    // Debug through Display keeps assert messages readable.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        std::fmt::Display::fmt(self, f)
    }
}

fn check_qubits(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::Config(format!(
            "qubit count {n} outside 1..={MAX_QUBITS}"
        )));
    }
    Ok(())
}

fn word_mask(n: usize) -> u32 {
    if n == 32 {
        u32::MAX
    } else {
        (1u32 << n) - 1
    }
}

fn reverse_low_bits(w: u32, n: usize) -> u32 {
    w.reverse_bits() >> (32 - n)
}

/// All 4^n canonical Hermitian strings in index order.
pub fn enumerate(n: usize) -> impl Iterator<Item = PauliString> {
    (0..1usize << (2 * n)).map(move |i| {
        PauliString::from_index(n, i).expect("enumeration stays in range")
    })
}

/// Canonical strings commuting with every generator.
pub fn commutant(n: usize, generators: &[PauliString]) -> Vec<PauliString> {
    enumerate(n)
        .filter(|g| generators.iter().all(|f| g.commutes_with(f)))
        .collect()
}

/// Subgroup (mod phases) generated by the given strings, as canonical
/// representatives sorted by index.
pub fn symplectic_closure(n: usize, generators: &[PauliString]) -> Vec<PauliString> {
    let mut seen = std::collections::BTreeSet::new();
    seen.insert(0usize);
    let mut frontier = vec![PauliString::identity(n)];
    while let Some(g) = frontier.pop() {
        for gen in generators {
            let h = g.mul(gen).canonicalized();
            if seen.insert(h.index()) {
                frontier.push(h);
            }
        }
    }
    seen.iter()
        .map(|&i| PauliString::from_index(n, i).expect("closure index valid"))
        .collect()
}

/// Hermitian operator as a real-weighted sum of canonical Pauli strings.
#[derive(Clone, Debug)]
pub struct PauliSum {
    n: usize,
    terms: Vec<(f64, PauliString)>,
}

impl PauliSum {
    pub fn new(n: usize) -> Result<Self> {
        check_qubits(n)?;
        Ok(Self { n, terms: Vec::new() })
    }

    /// Add coeff * string. A string carrying an extra -1 phase folds the sign
    /// into the coefficient; an imaginary phase is rejected (non-Hermitian).
    pub fn add(&mut self, coeff: f64, string: PauliString) -> Result<()> {
        if string.n_qubits() != self.n {
            return Err(Error::Dimension { expected: self.n, got: string.n_qubits() });
        }
        let canonical = string.canonicalized();
        let leftover = (4 + string.phase - canonical.phase) % 4;
        let signed = match leftover {
            0 => coeff,
            2 => -coeff,
            _ => {
                return Err(Error::Config(format!(
                    "term {string} has imaginary phase; sum would not be Hermitian"
                )))
            }
        };
        if let Some(slot) = self.terms.iter_mut().find(|(_, p)| *p == canonical) {
            slot.0 += signed;
        } else {
            self.terms.push((signed, canonical));
        }
        Ok(())
    }

    /// Build from (coefficient, label) pairs.
    pub fn from_labels(terms: &[(f64, &str)]) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| Error::Config("empty Pauli sum".into()))?;
        let n = PauliString::parse(first.1)?.n_qubits();
        let mut sum = Self::new(n)?;
        for &(c, label) in terms {
            sum.add(c, PauliString::parse(label)?)?;
        }
        Ok(sum)
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[(f64, PauliString)] {
        &self.terms
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            n: self.n,
            terms: self.terms.iter().map(|&(c, p)| (factor * c, p)).collect(),
        }
    }

    /// True when every term is made of I and Z only (diagonal matrix).
    pub fn is_diagonal(&self) -> bool {
        self.terms.iter().all(|(_, p)| p.x == 0)
    }

    /// True when the dense matrix is real (even Y count in every term).
    pub fn is_real(&self) -> bool {
        self.terms
            .iter()
            .all(|(_, p)| (p.x & p.z).count_ones() % 2 == 0)
    }

    /// Dense 2^n x 2^n matrix.
    pub fn matrix(&self) -> DMatrix<C64> {
        let dim = 1usize << self.n;
        let mut m = DMatrix::zeros(dim, dim);
        for (c, p) in &self.terms {
            let xr = reverse_low_bits(p.x, p.n) as usize;
            let zr = reverse_low_bits(p.z, p.n) as usize;
            for b in 0..dim {
                let sign = (b & zr).count_ones() % 2;
                let f = I_POW[((p.phase as u32 + 2 * sign) % 4) as usize];
                m[(b ^ xr, b)] += C64::new(*c, 0.0) * f;
            }
        }
        m
    }

    /// Dense real matrix; defined only when `is_real()`.
    pub fn matrix_real(&self) -> Result<nalgebra::DMatrix<f64>> {
        if !self.is_real() {
            return Err(Error::Numerical("Pauli sum has an imaginary matrix part".into()));
        }
        let m = self.matrix();
        Ok(m.map(|e| e.re))
    }

    /// Real diagonal as a vector; defined only when `is_diagonal()`.
    pub fn diagonal_real(&self) -> Result<nalgebra::DVector<f64>> {
        if !self.is_diagonal() {
            return Err(Error::Numerical("Pauli sum is not diagonal".into()));
        }
        let dim = 1usize << self.n;
        let mut d = nalgebra::DVector::zeros(dim);
        for (c, p) in &self.terms {
            let zr = reverse_low_bits(p.z, p.n) as usize;
            // diagonal terms are I/Z only: canonical phase 0, entry (-1)^{|b & z|}
            for (b, slot) in d.iter_mut().enumerate() {
                let sign = if (b & zr).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                *slot += c * sign;
            }
        }
        Ok(d)
    }

    /// Embed each term into a larger register via the position map.
    pub fn embed(&self, n_total: usize, positions: &[usize]) -> Result<Self> {
        let mut out = Self::new(n_total)?;
        for (c, p) in &self.terms {
            out.add(*c, p.embed(n_total, positions)?)?;
        }
        Ok(out)
    }
}
