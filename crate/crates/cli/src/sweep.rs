//! `--sweep` specifications such as `P=0:40:5;b=1,2,4` or `K=1,3,10`.
//!
//! Each clause is `name=values`, where values are a comma list or an
//! inclusive `start:stop:step` range. Names: `P` (dB), `K`, `b`, `eps`.

use anyhow::{bail, Context, Result};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Sweep {
    pub p_db: Option<Vec<f64>>,
    pub k: Option<Vec<u64>>,
    pub b: Option<Vec<u32>>,
    pub eps: Option<Vec<f64>>,
}

fn values(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let num = |s: &str| s.trim().parse::<f64>().with_context(|| format!("bad number '{s}'"));
    match parts.len() {
        1 => spec.split(',').map(num).collect(),
        3 => {
            let (start, stop, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
            if !(step > 0.0) || stop < start {
                bail!("range '{spec}' needs start <= stop and a positive step");
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            if n > 100_000 {
                bail!("range '{spec}' has too many points");
            }
            Ok((0..=n).map(|i| start + i as f64 * step).collect())
        }
        _ => bail!("'{spec}' is neither a list nor start:stop:step"),
    }
}

fn integers<T: TryFrom<u64>>(name: &str, v: Vec<f64>) -> Result<Vec<T>> {
    v.into_iter()
        .map(|x| {
            if x < 0.0 || x.fract() != 0.0 {
                bail!("{name} values must be nonnegative integers, got {x}");
            }
            T::try_from(x as u64).map_err(|_| anyhow::anyhow!("{name} value {x} out of range"))
        })
        .collect()
}

impl Sweep {
    pub fn parse(spec: &str) -> Result<Self> {
        let mut out = Sweep::default();
        for clause in spec.split(';').map(str::trim).filter(|c| !c.is_empty()) {
            let (name, vals) = clause.split_once('=').with_context(|| format!("sweep clause '{clause}' lacks '='"))?;
            let v = values(vals).with_context(|| format!("in sweep clause '{clause}'"))?;
            if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
                bail!("sweep clause '{clause}' has no usable values");
            }
            match name.trim() {
                "P" | "P_dB" => out.p_db = Some(v),
                "K" => out.k = Some(integers("K", v)?),
                "b" => out.b = Some(integers("b", v)?),
                "eps" | "epsilon" => out.eps = Some(v),
                other => bail!("unknown sweep variable '{other}' (expected P, K, b or eps)"),
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_lists_and_ranges() {
        let s = Sweep::parse("P=0:40:10; b=1,2,4;K=1e2,1000").unwrap();
        assert_eq!(s.p_db, Some(vec![0.0, 10.0, 20.0, 30.0, 40.0]));
        assert_eq!(s.b, Some(vec![1, 2, 4]));
        assert_eq!(s.k, Some(vec![100, 1000]));
        assert_eq!(s.eps, None);
        assert_eq!(Sweep::parse("eps=0.2,0.5").unwrap().eps, Some(vec![0.2, 0.5]));
    }

    #[test]
    fn rejects_nonsense() {
        for bad in ["Q=1", "P", "P=1:0:1", "K=1.5", "b=x", "P=1:2"] {
            assert!(Sweep::parse(bad).is_err(), "{bad}");
        }
    }
}
