//! Systematic `(K, K-2)` maximum-distance-separable erasure code over GF(256).
//!
//! The generator stacks the identity on a 2 x (K-2) Cauchy matrix. Every
//! square submatrix of a Cauchy matrix is nonsingular, so any K-2 rows of
//! the generator are invertible and any K-2 coded parts recover the data.

use std::sync::OnceLock;

use crate::model::Bitstring;
use crate::{Error, Result};

/// Longest supported code: evaluation points must be distinct field elements.
pub const MAX_CODE_LEN: usize = 256;

const PRIMITIVE_POLY: u16 = 0x11d;

struct Tables {
    exp: [u8; 512],
    log: [u8; 256],
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let mut exp = [0u8; 512];
        let mut log = [0u8; 256];
        let mut x: u16 = 1;
        for (i, e) in exp.iter_mut().take(255).enumerate() {
            *e = x as u8;
            log[x as usize] = i as u8;
            x <<= 1;
            if x & 0x100 != 0 {
                x ^= PRIMITIVE_POLY;
            }
        }
        for i in 255..512 {
            exp[i] = exp[i - 255];
        }
        Tables { exp, log }
    })
}

fn mul(a: u8, b: u8) -> u8 {
    if a == 0 || b == 0 {
        return 0;
    }
    let t = tables();
    t.exp[t.log[a as usize] as usize + t.log[b as usize] as usize]
}

fn inv(a: u8) -> u8 {
    assert!(a != 0, "zero has no inverse in GF(256)");
    let t = tables();
    t.exp[255 - t.log[a as usize] as usize]
}

/// Inverts a square matrix over GF(256) by Gauss-Jordan elimination.
fn invert(mut m: Vec<Vec<u8>>) -> Option<Vec<Vec<u8>>> {
    let n = m.len();
    let mut out: Vec<Vec<u8>> = (0..n)
        .map(|i| (0..n).map(|j| u8::from(i == j)).collect())
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|r| m[*r][col] != 0)?;
        m.swap(col, pivot);
        out.swap(col, pivot);
        let scale = inv(m[col][col]);
        for j in 0..n {
            m[col][j] = mul(m[col][j], scale);
            out[col][j] = mul(out[col][j], scale);
        }
        for r in 0..n {
            let f = m[r][col];
            if r != col && f != 0 {
                for j in 0..n {
                    m[r][j] ^= mul(f, m[col][j]);
                    out[r][j] ^= mul(f, out[col][j]);
                }
            }
        }
    }
    Some(out)
}

/// Rows of the generator matrix are the combinations producing each coded part.
#[derive(Debug, Clone)]
pub struct MdsCode {
    n: usize,
    generator: Vec<Vec<u8>>,
}

impl MdsCode {
    /// `(n, n-2)` code.
    pub fn new(n: usize) -> Result<Self> {
        if !(3..=MAX_CODE_LEN).contains(&n) {
            return Err(Error::BadCodeLength(n));
        }
        let k = n - 2;
        let mut generator: Vec<Vec<u8>> = (0..k)
            .map(|i| (0..k).map(|j| u8::from(i == j)).collect())
            .collect();
        // parity points {0, 1}, data points {2, ..., n-1}
        for x in 0..2u8 {
            generator.push((0..k).map(|j| inv(x ^ (j as u8 + 2))).collect());
        }
        Ok(MdsCode { n, generator })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn data_parts(&self) -> usize {
        self.n - 2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn combine(rows: &[Vec<u8>], data: &[Vec<u8>]) -> Vec<Vec<u8>> {
        let len = data[0].len();
        rows.iter()
            .map(|row| {
                let mut acc = vec![0u8; len];
                for (coef, part) in row.iter().zip(data) {
                    if *coef != 0 {
                        for (a, b) in acc.iter_mut().zip(part) {
                            *a ^= mul(*coef, *b);
                        }
                    }
                }
                acc
            })
            .collect()
    }

    fn check_parts<'a, I: IntoIterator<Item = &'a Bitstring>>(parts: I) -> Result<usize> {
        let mut len = None;
        for p in parts {
            if !p.is_byte_aligned() {
                return Err(Error::NotByteAligned(p.len()));
            }
            match len {
                None => len = Some(p.len()),
                Some(l) if l != p.len() => {
                    return Err(Error::LengthMismatch {
                        left: l,
                        right: p.len(),
                    })
                }
                _ => {}
            }
        }
        Ok(len.unwrap_or(0))
    }

    /// The `n` coded parts; the first `n - 2` equal the data.
    pub fn encode(&self, data: &[Bitstring]) -> Result<Vec<Bitstring>> {
        if data.len() != self.data_parts() {
            return Err(Error::WrongPartCount {
                expected: self.data_parts(),
                found: data.len(),
            });
        }
        Self::check_parts(data)?;
        let bytes: Vec<Vec<u8>> = data.iter().map(Bitstring::to_bytes).collect();
        Ok(Self::combine(&self.generator, &bytes)
            .iter()
            .map(|b| Bitstring::from_bytes(b))
            .collect())
    }

    /// Recovers the data from any `n - 2` of the coded parts; `None` marks an
    /// erasure.
    pub fn decode(&self, coded: &[Option<Bitstring>]) -> Result<Vec<Bitstring>> {
        if coded.len() != self.n {
            return Err(Error::WrongPartCount {
                expected: self.n,
                found: coded.len(),
            });
        }
        let k = self.data_parts();
        let present: Vec<(usize, &Bitstring)> = coded
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.as_ref().map(|b| (i, b)))
            .take(k)
            .collect();
        if present.len() < k {
            return Err(Error::TooFewParts {
                needed: k,
                found: present.len(),
            });
        }
        Self::check_parts(present.iter().map(|(_, b)| *b))?;
        let sub: Vec<Vec<u8>> = present
            .iter()
            .map(|(i, _)| self.generator[*i].clone())
            .collect();
        let inverse = invert(sub).expect("Cauchy-extended generator has invertible k-row subsets");
        let bytes: Vec<Vec<u8>> = present.iter().map(|(_, b)| b.to_bytes()).collect();
        Ok(Self::combine(&inverse, &bytes)
            .iter()
            .map(|b| Bitstring::from_bytes(b))
            .collect())
    }
}

/// Encodes `K-2` data parts into `K` coded parts.
pub fn mds_encode(data: &[Bitstring]) -> Result<Vec<Bitstring>> {
    MdsCode::new(data.len() + 2)?.encode(data)
}

/// Decodes a length-`K` slice with at most two erasures.
pub fn mds_decode(coded: &[Option<Bitstring>]) -> Result<Vec<Bitstring>> {
    MdsCode::new(coded.len())?.decode(coded)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::seed;

    #[test]
    fn field_inverses() {
        for a in 1..=255u8 {
            assert_eq!(mul(a, inv(a)), 1);
        }
        assert_eq!(mul(0x53, 0xca), mul(0xca, 0x53));
    }

    #[test]
    fn zero_data_zero_code() {
        let coded = mds_encode(&vec![Bitstring::zeros(16); 4]).unwrap();
        assert_eq!(coded.len(), 6);
        assert!(coded.iter().all(Bitstring::is_zero));
    }

    #[test]
    fn two_erasures_k5() {
        let mut rng = seed::rng(1);
        let data: Vec<Bitstring> = (0..3).map(|_| Bitstring::random(24, &mut rng)).collect();
        let coded = mds_encode(&data).unwrap();
        assert_eq!(&coded[..3], &data[..]);
        let mut erased: Vec<Option<Bitstring>> = coded.into_iter().map(Some).collect();
        erased[0] = None;
        erased[3] = None;
        assert_eq!(mds_decode(&erased).unwrap(), data);
    }

    #[test]
    fn every_erasure_pair_k7() {
        let mut rng = seed::rng(2);
        let data: Vec<Bitstring> = (0..5).map(|_| Bitstring::random(40, &mut rng)).collect();
        let coded = mds_encode(&data).unwrap();
        for a in 0..7 {
            for b in a + 1..7 {
                let erased: Vec<Option<Bitstring>> = coded
                    .iter()
                    .enumerate()
                    .map(|(i, c)| (i != a && i != b).then(|| c.clone()))
                    .collect();
                assert_eq!(mds_decode(&erased).unwrap(), data, "erasures {a},{b}");
            }
        }
    }

    #[test]
    fn largest_code() {
        let mut rng = seed::rng(3);
        let data: Vec<Bitstring> = (0..254).map(|_| Bitstring::random(8, &mut rng)).collect();
        let coded = mds_encode(&data).unwrap();
        let mut erased: Vec<Option<Bitstring>> = coded.into_iter().map(Some).collect();
        erased[7] = None;
        erased[255] = None;
        assert_eq!(mds_decode(&erased).unwrap(), data);
        assert_eq!(MdsCode::new(257).unwrap_err(), Error::BadCodeLength(257));
    }

    #[test]
    fn errors() {
        let coded = mds_encode(&vec![Bitstring::zeros(8); 3]).unwrap();
        let mut erased: Vec<Option<Bitstring>> = coded.into_iter().map(Some).collect();
        erased[0] = None;
        erased[1] = None;
        erased[2] = None;
        assert_eq!(
            mds_decode(&erased).unwrap_err(),
            Error::TooFewParts {
                needed: 3,
                found: 2
            }
        );
        assert!(matches!(
            mds_encode(&[Bitstring::zeros(8), Bitstring::zeros(16)]),
            Err(Error::LengthMismatch { .. })
        ));
        assert_eq!(
            mds_encode(&[Bitstring::zeros(5)]).unwrap_err(),
            Error::NotByteAligned(5)
        );
    }
}
