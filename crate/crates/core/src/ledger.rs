//! Symbol → vector bookkeeping: interned names, atom vectors, and memoized
//! compound encodings.

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex;

use crate::error::{Error, Result};
use crate::hrr::{Convolver, Hrr};
use crate::scalar::Scalar;

/// Name reserved for the identity vector.
pub const IDENTITY_NAME: &str = "I";

/// Interned handle for a symbol name. Stable across [`SymbolLedger::regrow`].
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol(u32);

impl Symbol {
    pub const IDENTITY: Symbol = Symbol(0);

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn is_identity(self) -> bool {
        self == Self::IDENTITY
    }
}

/// Maps symbol names to atom HRRs and ordered symbol tuples to their bound
/// compound. Atoms are drawn from the ledger's own generator when a name is
/// first interned; compounds are cached in insertion order.
#[derive(Clone, Debug)]
pub struct SymbolLedger<T: Scalar> {
    names: Vec<String>,
    index: HashMap<String, Symbol>,
    atoms: Vec<Hrr<T>>,
    spectra: Vec<Option<Vec<Complex<T>>>>,
    compounds: Vec<(Vec<Symbol>, Hrr<T>)>,
    compound_index: HashMap<Vec<Symbol>, usize>,
    convolver: Convolver<T>,
    rng: ChaCha8Rng,
}

impl<T: Scalar> SymbolLedger<T> {
    pub fn new(dimension: usize, rng: ChaCha8Rng) -> Result<Self> {
        let convolver = Convolver::new(dimension)?;
        let mut ledger = Self {
            names: Vec::new(),
            index: HashMap::new(),
            atoms: Vec::new(),
            spectra: Vec::new(),
            compounds: Vec::new(),
            compound_index: HashMap::new(),
            convolver,
            rng,
        };
        let id = ledger.symbol(IDENTITY_NAME)?;
        debug_assert_eq!(id, Symbol::IDENTITY);
        Ok(ledger)
    }

    pub fn with_seed(dimension: usize, seed: u64) -> Result<Self> {
        Self::new(dimension, ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn dimension(&self) -> usize {
        self.convolver.dimension()
    }

    /// Interns `name`, drawing its atom on first use.
    pub fn symbol(&mut self, name: &str) -> Result<Symbol> {
        if let Some(&s) = self.index.get(name) {
            return Ok(s);
        }
        let id = Symbol(self.names.len() as u32);
        let atom = self.draw_atom(id)?;
        self.names.push(name.to_owned());
        self.index.insert(name.to_owned(), id);
        self.atoms.push(atom);
        self.spectra.push(None);
        Ok(id)
    }

    pub fn lookup(&self, name: &str) -> Option<Symbol> {
        self.index.get(name).copied()
    }

    pub fn name(&self, symbol: Symbol) -> Option<&str> {
        self.names.get(symbol.index()).map(String::as_str)
    }

    pub fn atom(&self, symbol: Symbol) -> Result<&Hrr<T>> {
        self.atoms
            .get(symbol.index())
            .ok_or_else(|| Error::UnknownSymbol(format!("#{}", symbol.0)))
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn compound_count(&self) -> usize {
        self.compounds.len()
    }

    /// Every tuple encoded so far, in first-encoded order.
    pub fn compound_keys(&self) -> impl Iterator<Item = &[Symbol]> {
        self.compounds.iter().map(|(k, _)| k.as_slice())
    }

    /// Binds the atoms of `symbols` by circular convolution. Identity symbols
    /// drop out; the result is memoized by the exact tuple.
    pub fn encode(&mut self, symbols: &[Symbol]) -> Result<&Hrr<T>> {
        if let Some(&i) = self.compound_index.get(symbols) {
            return Ok(&self.compounds[i].1);
        }
        let hrr = self.bind(symbols)?;
        let i = self.compounds.len();
        self.compounds.push((symbols.to_vec(), hrr));
        self.compound_index.insert(symbols.to_vec(), i);
        Ok(&self.compounds[i].1)
    }

    /// Memoized encoding of `symbols`, if it has been computed.
    pub fn cached(&self, symbols: &[Symbol]) -> Option<&Hrr<T>> {
        self.compound_index
            .get(symbols)
            .map(|&i| &self.compounds[i].1)
    }

    /// Like [`encode`](Self::encode) but addressed by names, interning any
    /// new ones.
    pub fn encode_names(&mut self, names: &[&str]) -> Result<&Hrr<T>> {
        let symbols = names
            .iter()
            .map(|n| self.symbol(n))
            .collect::<Result<Vec<_>>>()?;
        self.encode(&symbols)
    }

    /// Redraws every atom at `dimension` and forgets all compounds. Symbol
    /// handles stay valid.
    pub fn regrow(&mut self, dimension: usize) -> Result<()> {
        self.convolver = Convolver::new(dimension)?;
        let atoms = (0..self.names.len() as u32)
            .map(|i| self.draw_atom(Symbol(i)))
            .collect::<Result<Vec<_>>>()?;
        self.atoms = atoms;
        self.spectra = vec![None; self.atoms.len()];
        self.compounds.clear();
        self.compound_index.clear();
        Ok(())
    }

    fn draw_atom(&mut self, id: Symbol) -> Result<Hrr<T>> {
        let n = self.dimension();
        if id.is_identity() {
            Hrr::identity(n)
        } else {
            Hrr::random(n, &mut self.rng)
        }
    }

    fn bind(&mut self, symbols: &[Symbol]) -> Result<Hrr<T>> {
        if symbols.is_empty() {
            return Err(Error::InvalidArgument("cannot encode an empty tuple".into()));
        }
        for &s in symbols {
            if s.index() >= self.atoms.len() {
                return Err(Error::UnknownSymbol(format!("#{}", s.0)));
            }
        }
        let mut factors = symbols.iter().copied().filter(|s| !s.is_identity());
        let Some(first) = factors.next() else {
            return Hrr::identity(self.dimension());
        };
        let rest: Vec<Symbol> = factors.collect();
        if rest.is_empty() {
            return Ok(self.atoms[first.index()].clone());
        }
        let mut product = self.spectrum(first).to_vec();
        for s in rest {
            let spec = self.spectrum(s);
            for (p, q) in product.iter_mut().zip(spec) {
                *p *= *q;
            }
        }
        self.convolver.from_spectrum(product)
    }

    fn spectrum(&mut self, s: Symbol) -> &[Complex<T>] {
        let i = s.index();
        if self.spectra[i].is_none() {
            let spec = self
                .convolver
                .spectrum(&self.atoms[i])
                .expect("atoms share the ledger dimension");
            self.spectra[i] = Some(spec);
        }
        self.spectra[i].as_deref().unwrap()
    }
}

/// Dimension after growing to `atr_count` task representations:
/// `round(atr_count * n / (atr_count - 1))`.
pub fn grow_dimension(n: usize, atr_count: usize) -> Result<usize> {
    if n == 0 {
        return Err(Error::InvalidDimension(n));
    }
    if atr_count < 2 {
        return Err(Error::InvalidArgument(format!(
            "growth needs at least 2 ATRs, got {atr_count}"
        )));
    }
    let denom = atr_count - 1;
    Ok((atr_count * n + denom / 2) / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hrr::convolve;

    fn ledger(n: usize) -> SymbolLedger<f64> {
        SymbolLedger::with_seed(n, 42).unwrap()
    }

    #[test]
    fn identity_symbol_is_reserved() {
        let mut l = ledger(8);
        let i = l.symbol(IDENTITY_NAME).unwrap();
        assert_eq!(i, Symbol::IDENTITY);
        assert_eq!(l.atom(i).unwrap(), &Hrr::identity(8).unwrap());
        assert_eq!(l.encode(&[i]).unwrap(), &Hrr::identity(8).unwrap());
    }

    #[test]
    fn identity_elimination() {
        let mut l = ledger(64);
        let v = l.encode_names(&["s3", "I", "I", "atr0", "I"]).unwrap().clone();
        let s3 = l.atom(l.lookup("s3").unwrap()).unwrap().clone();
        let atr0 = l.atom(l.lookup("atr0").unwrap()).unwrap().clone();
        let expected = convolve(&s3, &atr0).unwrap();
        assert!(v.max_abs_diff(&expected).unwrap() < 1e-12);
    }

    #[test]
    fn single_atom_tuple_is_the_atom() {
        let mut l = ledger(16);
        let v = l.encode_names(&["I", "x", "I"]).unwrap().clone();
        assert_eq!(&v, l.atom(l.lookup("x").unwrap()).unwrap());
    }

    #[test]
    fn memoized_encoding() {
        let mut l = ledger(32);
        let a = l.encode_names(&["s1", "R", "atr0"]).unwrap().clone();
        let atoms = l.atom_count();
        let compounds = l.compound_count();
        let b = l.encode_names(&["s1", "R", "atr0"]).unwrap().clone();
        assert_eq!(a, b);
        assert_eq!(l.atom_count(), atoms);
        assert_eq!(l.compound_count(), compounds);
    }

    #[test]
    fn empty_and_unknown_tuples() {
        let mut l = ledger(8);
        assert!(l.encode(&[]).is_err());
        assert!(matches!(
            l.encode(&[Symbol(99)]),
            Err(Error::UnknownSymbol(_))
        ));
    }

    #[test]
    fn regrow_redraws_and_forgets() {
        let mut l = ledger(16);
        let x = l.symbol("x").unwrap();
        let before = l.atom(x).unwrap().clone();
        l.encode(&[x, x]).unwrap();
        l.regrow(32).unwrap();
        assert_eq!(l.dimension(), 32);
        assert_eq!(l.compound_count(), 0);
        assert_eq!(l.lookup("x"), Some(x));
        assert_eq!(l.atom(x).unwrap().len(), 32);
        assert_ne!(l.atom(x).unwrap().as_slice()[..16], before.as_slice()[..]);
        assert_eq!(l.atom(Symbol::IDENTITY).unwrap(), &Hrr::identity(32).unwrap());
    }

    #[test]
    fn grow_dimension_values() {
        assert_eq!(grow_dimension(6144, 2).unwrap(), 12288);
        assert_eq!(grow_dimension(12288, 3).unwrap(), 18432);
        assert_eq!(grow_dimension(25600, 2).unwrap(), 51200);
        assert!(grow_dimension(100, 1).is_err());
        assert!(grow_dimension(100, 0).is_err());
    }

    #[test]
    fn repeated_growth_is_linear() {
        let n0 = 1536;
        let mut n = n0;
        for k in 2..=8 {
            n = grow_dimension(n, k).unwrap();
            assert_eq!(n, k * n0);
        }
    }

    #[test]
    fn same_seed_same_atoms() {
        let mut a = ledger(64);
        let mut b = ledger(64);
        let va = a.encode_names(&["p", "q"]).unwrap().clone();
        let vb = b.encode_names(&["p", "q"]).unwrap().clone();
        assert_eq!(va, vb);
    }
}
