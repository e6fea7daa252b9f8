//! Closed-form evaluators for the compression ratios, the
//! arbitrary-precision uncertainty metric with a brute-force oracle, and
//! the most-probable-string score.
//!
//! All ratio arithmetic is exact rational; decimals appear only at render
//! time. Scientific exponents come from decimal digit counts, never from
//! floating point.

use num_bigint::{BigInt, BigUint};
use num_integer::binomial;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::symstring::{Params, SymbolString};

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn big(n: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Formula and measured compression ratios for one configuration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatioReport {
    pub ucr: BigRational,
    pub ccr: BigRational,
    pub gcr: BigRational,
}

impl RatioReport {
    pub fn render(&self) -> String {
        format!(
            "UCR = {} ({:.6})\nCCR = {} ({:.6})\nGCR = {} ({:.6})",
            self.ucr,
            self.ucr.to_f64().unwrap_or(f64::NAN),
            self.ccr,
            self.ccr.to_f64().unwrap_or(f64::NAN),
            self.gcr,
            self.gcr.to_f64().unwrap_or(f64::NAN),
        )
    }
}

/// Client-side ratio: (x*(ceil(log2 n_o)+k) + s_h) / (k*n_o).
pub fn ucr_formula(p: &Params) -> Result<BigRational> {
    p.validate()?;
    let x = p.deletions() as u64;
    let num = big(x * (p.pos_bits() as u64 + p.k as u64) + p.s_h as u64);
    Ok(num / big(p.original_bits()))
}

/// The condition under which the client actually compresses.
pub fn ucr_below_one(p: &Params) -> Result<bool> {
    Ok(ucr_formula(p)? < BigRational::one())
}

/// Cloud-side ratio for base fraction `r = N_b/N_f`:
/// (s_h + 2*tau*ceil(log2 n_o) + r*(k*n_b - 2*tau*ceil(log2 n_o))) / (k*n_o).
pub fn ccr_formula(p: &Params, r: &BigRational) -> Result<BigRational> {
    p.validate()?;
    if r < &BigRational::zero() || r > &BigRational::one() {
        return Err(Error::InvalidParams(format!("r={r} outside [0,1]")));
    }
    let dev = 2 * p.tau as u64 * p.pos_bits() as u64;
    let per_base = BigRational::from_integer(
        BigInt::from(p.base_bits()) - BigInt::from(dev),
    );
    let num = big(p.s_h as u64 + dev) + r * per_base;
    Ok(num / big(p.original_bits()))
}

/// Largest `r` for which the cloud still compresses (ccr <= 1), when the
/// per-base coefficient is positive.
pub fn ccr_r_threshold(p: &Params) -> Result<Option<BigRational>> {
    p.validate()?;
    let dev = 2 * p.tau as u64 * p.pos_bits() as u64;
    let coeff = BigInt::from(p.base_bits()) - BigInt::from(dev);
    if coeff <= BigInt::zero() {
        return Ok(None);
    }
    let num = BigInt::from(p.original_bits()) - BigInt::from(p.s_h as u64 + dev);
    Ok(Some(BigRational::new(num, coeff)))
}

/// Global ratio: exactly `ucr_formula + ccr_formula`.
pub fn gcr_formula(p: &Params, r: &BigRational) -> Result<BigRational> {
    Ok(ucr_formula(p)? + ccr_formula(p, r)?)
}

/// Ratios measured from actual storage sizes. `db_bits` is the original
/// database size, N_f * k * n_o.
pub fn measured_ratios(client_bits: u64, cloud_bits: u64, db_bits: u64) -> Result<RatioReport> {
    if db_bits == 0 {
        return Err(Error::InvalidParams("db_bits must be positive".into()));
    }
    let ucr = big(client_bits) / big(db_bits);
    let ccr = big(cloud_bits) / big(db_bits);
    let gcr = &ucr + &ccr;
    Ok(RatioReport { ucr, ccr, gcr })
}

/// Preimage count and the uniform-prior uncertainty derived from it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UncertaintyReport {
    pub n_preimages: BigUint,
    pub lower_bound: BigUint,
    pub u_metric: BigRational,
}

impl UncertaintyReport {
    /// Scientific rendering of the uncertainty, e.g. `4.25e-10`.
    pub fn u_metric_sci(&self, sig_digits: u32) -> String {
        sci(&self.u_metric, sig_digits)
    }
}

/// Number of length-n_o supersequences of any fixed length-n_b string:
/// sum over j of C(n_o, j+n_b) * (2^k - 1)^(n_o - n_b - j). The count
/// depends only on the lengths, not on the base's content. Also returns
/// the j=0 term, a lower bound that tightens as 2^k grows.
pub fn n_preimages(k: u8, n_o: u32, n_b: u32) -> Result<(BigUint, BigUint)> {
    if n_b > n_o || n_b == 0 {
        return Err(Error::InvalidParams(format!(
            "need 1 <= n_b <= n_o, got n_b={n_b}, n_o={n_o}"
        )));
    }
    let x = n_o - n_b;
    let q = (BigUint::one() << k as usize) - BigUint::one(); // 2^k - 1
    // running term: binom = C(n_o, j+n_b), pw = q^(x-j)
    let mut binom = binomial(BigUint::from(n_o), BigUint::from(n_b));
    let mut pw = q.pow(x);
    let first = &binom * &pw;
    let mut total = first.clone();
    for j in 1..=x {
        binom = binom * (n_o - (n_b + j - 1)) / (n_b + j);
        pw /= &q;
        total += &binom * &pw;
    }
    Ok((total, first))
}

pub fn uncertainty(k: u8, n_o: u32, n_b: u32) -> Result<UncertaintyReport> {
    let (count, lower) = n_preimages(k, n_o, n_b)?;
    let u_metric = BigRational::new(BigInt::one(), BigInt::from(count.clone()));
    Ok(UncertaintyReport { n_preimages: count, lower_bound: lower, u_metric })
}

/// Brute-force supersequence count: enumerates every length-n_o string
/// over the k-bit alphabet and tests the subsequence relation greedily.
/// Guarded to keep the state space enumerable.
pub fn supersequence_count_oracle(base: &SymbolString, n_o: u32) -> Result<u64> {
    let n_b = base.len() as u32;
    if n_b == 0 || n_b > n_o {
        return Err(Error::InvalidParams(format!(
            "base length {n_b} incompatible with n_o={n_o}"
        )));
    }
    let alphabet: u64 = 1 << base.k();
    let space = (alphabet as f64).powi(n_o as i32);
    if space > (1u64 << 24) as f64 {
        return Err(Error::TooLarge(format!(
            "{alphabet}^{n_o} strings exceed the enumeration guard"
        )));
    }
    let target = base.symbols();
    let mut digits = vec![0u32; n_o as usize];
    let mut count = 0u64;
    loop {
        // greedy subsequence check
        let mut t = 0usize;
        for &d in &digits {
            if t < target.len() && d == target[t] {
                t += 1;
            }
        }
        if t == target.len() {
            count += 1;
        }
        // odometer increment
        let mut pos = digits.len();
        loop {
            if pos == 0 {
                return Ok(count);
            }
            pos -= 1;
            digits[pos] += 1;
            if (digits[pos] as u64) < alphabet {
                break;
            }
            digits[pos] = 0;
        }
    }
}

/// Symbol prior over the k-bit alphabet, exact rationals summing to 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolDistribution {
    pub k: u8,
    pub probs: Vec<BigRational>,
}

impl SymbolDistribution {
    pub fn uniform(k: u8) -> Result<Self> {
        Self::check_k(k)?;
        let n = 1usize << k;
        let p = rat(1, n as i64);
        Ok(SymbolDistribution { k, probs: vec![p; n] })
    }

    pub fn from_counts(k: u8, counts: &[u64]) -> Result<Self> {
        Self::check_k(k)?;
        if counts.len() != 1 << k {
            return Err(Error::InvalidParams(format!(
                "expected {} counts, got {}",
                1u64 << k,
                counts.len()
            )));
        }
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::InvalidParams("all counts are zero".into()));
        }
        let probs = counts.iter().map(|&c| big(c) / big(total)).collect();
        Ok(SymbolDistribution { k, probs })
    }

    fn check_k(k: u8) -> Result<()> {
        if !crate::symstring::ALLOWED_K.contains(&k) || k > 16 {
            return Err(Error::TooLarge(format!(
                "alphabet of 2^{k} symbols is not tabulable"
            )));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        Self::check_k(self.k)?;
        if self.probs.len() != 1 << self.k {
            return Err(Error::InvalidParams("wrong distribution size".into()));
        }
        let sum: BigRational = self.probs.iter().sum();
        if !sum.is_one() || self.probs.iter().any(|p| p.is_negative()) {
            return Err(Error::InvalidParams("probabilities must be >= 0 and sum to 1".into()));
        }
        Ok(())
    }
}

fn longest_run(symbols: &[u32], value: u32) -> u64 {
    let mut best = 0u64;
    let mut run = 0u64;
    for &s in symbols {
        if s == value {
            run += 1;
            best = best.max(run);
        } else {
            run = 0;
        }
    }
    best
}

/// Attacker's best-guess score: max over symbols i of
/// (1/2) * p_i^x * (x+1) * (2*l_i + x), with l_i the longest run of i in
/// the base and x the number of deletions. This is a duplicate-weighted
/// score, not a normalized probability; it can exceed 1.
pub fn most_probable_string_score(
    base: &SymbolString,
    dist: &SymbolDistribution,
    n_o: u32,
) -> Result<(u32, BigRational)> {
    dist.validate()?;
    if base.is_empty() {
        return Err(Error::InvalidParams("empty base".into()));
    }
    if base.k() != dist.k {
        return Err(Error::WidthMismatch { left: base.k(), right: dist.k });
    }
    if (base.len() as u32) > n_o {
        return Err(Error::InvalidParams("base longer than n_o".into()));
    }
    let x = n_o - base.len() as u32;
    let mut best: Option<(u32, BigRational)> = None;
    for (i, p) in dist.probs.iter().enumerate() {
        let l = longest_run(base.symbols(), i as u32);
        let score = rat(1, 2) * pow_rat(p, x) * big(x as u64 + 1) * big(2 * l + x as u64);
        match &best {
            Some((_, s)) if *s >= score => {}
            _ => best = Some((i as u32, score)),
        }
    }
    Ok(best.unwrap())
}

fn pow_rat(p: &BigRational, e: u32) -> BigRational {
    let mut out = BigRational::one();
    for _ in 0..e {
        out *= p;
    }
    out
}

/// Diagnostics for the two client-side deletion policies: how uniform the
/// corpus looks (Policy 1) and how much run structure remains (Policy 2).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolicyReport {
    pub histogram: Vec<u64>,
    /// Total-variation distance between the empirical symbol distribution
    /// and uniform.
    pub tv_distance: BigRational,
    /// Adjacent equal-symbol pairs per base, in input order.
    pub adjacent_equal: Vec<u64>,
}

pub fn policy_reports(bases: &[SymbolString]) -> Result<PolicyReport> {
    let first = bases.first().ok_or_else(|| Error::InvalidParams("empty corpus".into()))?;
    let k = first.k();
    SymbolDistribution::check_k(k)?;
    let mut histogram = vec![0u64; 1 << k];
    let mut adjacent_equal = Vec::with_capacity(bases.len());
    for b in bases {
        if b.k() != k {
            return Err(Error::WidthMismatch { left: b.k(), right: k });
        }
        for &s in b.symbols() {
            histogram[s as usize] += 1;
        }
        let pairs = b.symbols().windows(2).filter(|w| w[0] == w[1]).count();
        adjacent_equal.push(pairs as u64);
    }
    let total: u64 = histogram.iter().sum();
    if total == 0 {
        return Err(Error::InvalidParams("corpus has no symbols".into()));
    }
    let uni = rat(1, 1 << k);
    let tv_distance = histogram
        .iter()
        .map(|&c| (big(c) / big(total) - &uni).abs())
        .sum::<BigRational>()
        / big(2);
    Ok(PolicyReport { histogram, tv_distance, adjacent_equal })
}

/// Scientific notation with `sig` significant digits. The exponent is
/// derived from decimal digit counts of numerator and denominator.
pub fn sci(r: &BigRational, sig: u32) -> String {
    assert!(sig >= 1);
    if r.is_zero() {
        return "0e0".into();
    }
    let neg = r.is_negative();
    let num = r.numer().magnitude().clone();
    let den = r.denom().magnitude().clone();
    let digits = |v: &BigUint| v.to_str_radix(10).len() as i64;
    let mut e = digits(&num) - digits(&den);
    let mantissa_int = loop {
        // m = round(num * 10^(sig-1-e) / den), then check m has `sig` digits
        let p = sig as i64 - 1 - e;
        let (n_scaled, d_scaled) = if p >= 0 {
            (&num * BigUint::from(10u32).pow(p as u32), den.clone())
        } else {
            (num.clone(), &den * BigUint::from(10u32).pow((-p) as u32))
        };
        let m = (&n_scaled * 2u32 + &d_scaled) / (&d_scaled * 2u32);
        let lo = BigUint::from(10u32).pow(sig - 1);
        let hi = BigUint::from(10u32).pow(sig);
        if m >= hi {
            e += 1;
        } else if m < lo {
            e -= 1;
        } else {
            break m;
        }
    };
    let s = mantissa_int.to_str_radix(10);
    let mantissa = if sig == 1 {
        s
    } else {
        format!("{}.{}", &s[..1], &s[1..])
    };
    format!("{}{}e{}", if neg { "-" } else { "" }, mantissa, e)
}
