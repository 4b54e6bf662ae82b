use std::collections::BTreeMap;

use rug::Rational;

use super::{Branch, BranchKind, Disc, SystemError, SystemSpec, WeightFamily};
use crate::arith::parse_decimal_rational;

/// Parsed key/value pairs, in file order of first appearance.
pub type ConfigMap = BTreeMap<String, String>;

const KNOWN_PREFIXES: &[&str] = &["branch.", "markov.row."];
const KNOWN_KEYS: &[&str] = &["system", "eps", "digits", "c", "disc.center", "disc.radius"];

/// Parses the line-oriented `key=value` grammar. `#` starts a comment.
pub fn parse_config(text: &str) -> Result<ConfigMap, SystemError> {
    let mut map = ConfigMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        // allow several comma-free pairs on one line separated by ", " only
        // when every chunk has an '=': "system=cf_digits, digits=[1,2]"
        for chunk in split_pairs(line) {
            let (k, v) = chunk.split_once('=').ok_or_else(|| {
                SystemError::ParseError(format!("line {}: expected key=value", lineno + 1))
            })?;
            let k = k.trim().to_string();
            let v = v.trim().to_string();
            let known = KNOWN_KEYS.contains(&k.as_str())
                || KNOWN_PREFIXES.iter().any(|p| k.starts_with(p));
            if !known {
                return Err(SystemError::ParseError(format!("unknown key `{k}`")));
            }
            if map.insert(k.clone(), v).is_some() {
                return Err(SystemError::ParseError(format!("duplicate key `{k}`")));
            }
        }
    }
    Ok(map)
}

fn split_pairs(line: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0;
    let mut start = 0;
    let bytes = line.as_bytes();
    for (i, &b) in bytes.iter().enumerate() {
        match b {
            b'[' => depth += 1,
            b']' => depth -= 1,
            b',' if depth == 0 => {
                let rest = &line[i + 1..];
                let next_is_pair = rest
                    .split(',')
                    .next()
                    .map(|s| s.contains('='))
                    .unwrap_or(false);
                if next_is_pair {
                    out.push(line[start..i].trim());
                    start = i + 1;
                }
            }
            _ => {}
        }
    }
    out.push(line[start..].trim());
    out
}

fn rat(s: &str) -> Result<Rational, SystemError> {
    parse_decimal_rational(s).map_err(|_| SystemError::ParseError(format!("bad number `{s}`")))
}

fn parse_digits(s: &str) -> Result<Vec<u32>, SystemError> {
    let inner = s
        .trim()
        .strip_prefix('[')
        .and_then(|t| t.strip_suffix(']'))
        .ok_or_else(|| SystemError::ParseError(format!("digits must look like [1,2,...], got `{s}`")))?;
    let mut out = Vec::new();
    for d in inner.split(',') {
        let d = d.trim();
        let v: u32 = d
            .parse()
            .map_err(|_| SystemError::ParseError(format!("bad digit `{d}`")))?;
        if v == 0 {
            return Err(SystemError::ParseError("digits must be positive".into()));
        }
        out.push(v);
    }
    if out.is_empty() {
        return Err(SystemError::ParseError("empty digit set".into()));
    }
    let mut sorted = out.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != out.len() {
        return Err(SystemError::ParseError("repeated digit".into()));
    }
    Ok(out)
}

/// Parses `re+imi`, `re-imi`, `re` or `re,im`.
pub fn parse_complex(s: &str) -> Result<(Rational, Rational), SystemError> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once(',') {
        return Ok((rat(a)?, rat(b)?));
    }
    let Some(body) = s.strip_suffix('i') else {
        return Ok((rat(s)?, Rational::new()));
    };
    let bytes = body.as_bytes();
    let mut split = None;
    for i in (1..bytes.len()).rev() {
        if (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E') {
            split = Some(i);
            break;
        }
    }
    match split {
        Some(i) => {
            let re = rat(&body[..i])?;
            let im_s = &body[i..];
            let im = match im_s {
                "+" => Rational::from(1),
                "-" => Rational::from(-1),
                _ => rat(im_s.trim_start_matches('+'))?,
            };
            Ok((re, im))
        }
        None => Ok((Rational::new(), if body.is_empty() { Rational::from(1) } else { rat(body)? })),
    }
}

fn disc_override(map: &ConfigMap, default: Disc) -> Result<Disc, SystemError> {
    let center = match map.get("disc.center") {
        Some(v) => rat(v)?,
        None => default.center,
    };
    let radius = match map.get("disc.radius") {
        Some(v) => rat(v)?,
        None => default.radius,
    };
    if radius <= 0 {
        return Err(SystemError::ParseError("disc.radius must be positive".into()));
    }
    Ok(Disc::new(center, radius))
}

fn q(n: i64, d: i64) -> Rational {
    Rational::from((n, d))
}

fn reject(map: &ConfigMap, keys: &[&str], system: &str) -> Result<(), SystemError> {
    for k in map.keys() {
        if keys.iter().any(|x| k == x || k.starts_with(x)) {
            return Err(SystemError::ParseError(format!("key `{k}` is not valid for system `{system}`")));
        }
    }
    Ok(())
}

/// Builds and validates a system from config text.
pub fn load_system(config_text: &str) -> Result<SystemSpec, SystemError> {
    let map = parse_config(config_text)?;
    let system = map
        .get("system")
        .ok_or_else(|| SystemError::ParseError("missing `system=` line".into()))?
        .clone();
    let mut spec = SystemSpec {
        name: system.clone(),
        branches: Vec::new(),
        discs: Vec::new(),
        bernoulli: true,
        circle: false,
        weight_family: WeightFamily::default(),
        markov: None,
        julia: None,
        orientation: Vec::new(),
        real_fragment: (Rational::new(), Rational::from(1)),
        canonical: String::new(),
    };
    match system.as_str() {
        "doubling" => {
            reject(&map, &["eps", "digits", "c", "branch."], &system)?;
            spec.circle = true;
            spec.branches = vec![
                Branch::affine(q(1, 2), q(0, 1)),
                Branch::affine(q(1, 2), q(1, 2)),
            ];
            spec.discs = vec![disc_override(&map, Disc::new(q(1, 2), q(2, 1)))?];
        }
        "doubling_eps" => {
            reject(&map, &["digits", "c", "branch."], &system)?;
            let eps = rat(map
                .get("eps")
                .ok_or_else(|| SystemError::ParseError("doubling_eps needs eps=".into()))?)?;
            // accept only when 4·π_upper·|eps| < 1, with π < 3.14159266
            let bound = Rational::from(eps.abs_ref()) * Rational::from((314159266, 25000000));
            if bound >= 1 {
                return Err(SystemError::ExpansionViolation { branch: 0 });
            }
            spec.circle = true;
            spec.name = format!("doubling_eps({})", map["eps"]);
            spec.branches = (0..2)
                .map(|k| {
                    Branch::new(BranchKind::ImplicitSine {
                        eps: eps.clone(),
                        shift: Rational::from(k),
                    })
                })
                .collect();
            if !map.contains_key("disc.radius") {
                // largest default lift disc that passes validation
                let mut last = None;
                for r in [q(3, 4), q(2, 3), q(3, 5)] {
                    let mut trial = spec.clone();
                    trial.discs = vec![disc_override(&map, Disc::new(q(1, 2), r))?];
                    match finish(trial, &map) {
                        Ok(s) => return Ok(s),
                        Err(e) => last = Some(e),
                    }
                }
                return Err(last.unwrap());
            }
            spec.discs = vec![disc_override(&map, Disc::new(q(1, 2), q(3, 4)))?];
        }
        "lanford" => {
            reject(&map, &["eps", "digits", "c", "branch."], &system)?;
            let coeffs = vec![q(0, 1), q(5, 2), q(-1, 2)];
            spec.branches = (0..2)
                .map(|k| {
                    Branch::new(BranchKind::PolyInverse {
                        coeffs: coeffs.clone(),
                        shift: Rational::from(k),
                        sign: 1,
                    })
                })
                .collect();
            spec.discs = vec![disc_override(&map, Disc::new(q(33, 50), q(43, 50)))?];
        }
        "cf_digits" | "e2" => {
            reject(&map, &["eps", "c", "branch."], &system)?;
            let digits = match map.get("digits") {
                Some(d) => parse_digits(d)?,
                None if system == "e2" => vec![1, 2],
                None => return Err(SystemError::ParseError("cf_digits needs digits=[...]".into())),
            };
            spec.name = format!(
                "cf_digits({})",
                digits.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(",")
            );
            spec.branches = digits.iter().map(|&i| Branch::moebius(0, 1, 1, i as i64)).collect();
            spec.discs = vec![disc_override(&map, Disc::new(q(1, 1), q(3, 2)))?];
        }
        "cantor" => {
            reject(&map, &["eps", "digits", "c", "branch."], &system)?;
            spec.branches = vec![
                Branch::affine(q(1, 3), q(0, 1)),
                Branch::affine(q(1, 3), q(2, 3)),
            ];
            spec.discs = vec![disc_override(&map, Disc::new(q(1, 2), q(1, 1)))?];
        }
        "quadratic_julia" | "julia" => {
            reject(&map, &["eps", "digits", "branch.", "disc.", "markov."], &system)?;
            let c = parse_complex(map
                .get("c")
                .ok_or_else(|| SystemError::ParseError("quadratic_julia needs c=".into()))?)?;
            let m2 = c.0.clone() * &c.0 + c.1.clone() * &c.1;
            if m2 > q(1, 25) {
                return Err(SystemError::ParseError("quadratic_julia requires |c| <= 0.2".into()));
            }
            spec.name = format!("quadratic_julia({})", map["c"]);
            spec.julia = Some(c);
            spec.bernoulli = false;
        }
        "custom" => {
            reject(&map, &["eps", "digits", "c"], &system)?;
            let mut idx: Vec<(usize, Vec<Rational>)> = Vec::new();
            for (k, v) in &map {
                if let Some(rest) = k.strip_prefix("branch.") {
                    let (n, kind) = rest
                        .split_once('.')
                        .ok_or_else(|| SystemError::ParseError(format!("bad key `{k}`")))?;
                    if kind != "moebius" {
                        return Err(SystemError::ParseError(format!("unknown branch kind `{kind}`")));
                    }
                    let n: usize = n
                        .parse()
                        .map_err(|_| SystemError::ParseError(format!("bad branch index in `{k}`")))?;
                    let vals = v.split(',').map(rat).collect::<Result<Vec<_>, _>>()?;
                    if vals.len() != 4 {
                        return Err(SystemError::ParseError(format!("`{k}` needs a,b,c,d")));
                    }
                    idx.push((n, vals));
                }
            }
            idx.sort_by_key(|(n, _)| *n);
            for (pos, (n, _)) in idx.iter().enumerate() {
                if *n != pos && *n != pos + 1 {
                    return Err(SystemError::ParseError("branch indices must be consecutive".into()));
                }
            }
            spec.branches = idx
                .into_iter()
                .map(|(_, v)| {
                    let mut it = v.into_iter();
                    Branch::new(BranchKind::Moebius {
                        a: it.next().unwrap(),
                        b: it.next().unwrap(),
                        c: it.next().unwrap(),
                        d: it.next().unwrap(),
                    })
                })
                .collect();
            if !map.contains_key("disc.center") || !map.contains_key("disc.radius") {
                return Err(SystemError::ParseError("custom systems need disc.center and disc.radius".into()));
            }
            spec.discs = vec![disc_override(&map, Disc::new(q(0, 1), q(1, 1)))?];
        }
        other => return Err(SystemError::ParseError(format!("unknown system `{other}`"))),
    }
    finish(spec, &map)
}

fn finish(mut spec: SystemSpec, map: &ConfigMap) -> Result<SystemSpec, SystemError> {
    let rows: Vec<(usize, &String)> = map
        .iter()
        .filter_map(|(k, v)| {
            k.strip_prefix("markov.row.")
                .map(|n| (n.parse::<usize>().map_err(|_| ()), v))
        })
        .map(|(n, v)| n.map(|n| (n, v)))
        .collect::<Result<_, _>>()
        .map_err(|_| SystemError::ParseError("bad markov row index".into()))?;
    if !rows.is_empty() {
        let k = spec.branches.len();
        let base = rows.iter().map(|(n, _)| *n).min().unwrap();
        let mut m = vec![Vec::new(); k];
        for (n, v) in rows {
            let i = n - base;
            if i >= k {
                return Err(SystemError::ParseError("markov row index out of range".into()));
            }
            m[i] = v
                .split(',')
                .map(|x| match x.trim() {
                    "0" => Ok(0u8),
                    "1" => Ok(1u8),
                    o => Err(SystemError::ParseError(format!("markov entry `{o}` is not 0/1"))),
                })
                .collect::<Result<_, _>>()?;
        }
        spec.markov = Some(m);
    }
    spec.canonical = map
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(";");
    spec.validate()?;
    Ok(spec)
}

/// Config text for a `builtin:` name such as `e2`, `cf_digits:1,2,3`,
/// `doubling_eps:0.01` or `julia:0.05,0`.
pub fn builtin_config(name: &str) -> Result<String, SystemError> {
    let (head, arg) = match name.split_once(':') {
        Some((h, a)) => (h, Some(a)),
        None => (name, None),
    };
    let text = match (head, arg) {
        ("e2", None) => "system=cf_digits\ndigits=[1,2]".to_string(),
        ("lanford", None) | ("doubling", None) | ("cantor", None) => format!("system={head}"),
        ("cf_digits", Some(a)) => format!("system=cf_digits\ndigits=[{a}]"),
        ("doubling_eps", Some(a)) => format!("system=doubling_eps\neps={a}"),
        ("julia", Some(a)) | ("quadratic_julia", Some(a)) => format!("system=quadratic_julia\nc={a}"),
        _ => return Err(SystemError::ParseError(format!("unknown builtin `{name}`"))),
    };
    Ok(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lanford_has_two_branches() {
        let s = load_system("system=lanford").unwrap();
        assert_eq!(s.branches.len(), 2);
        assert!(s.bernoulli && !s.circle);
    }

    #[test]
    fn cf_digits_pair() {
        let s = load_system("system=cf_digits, digits=[1,2]").unwrap();
        assert_eq!(s.branches[0], Branch::moebius(0, 1, 1, 1));
        assert_eq!(s.branches[1], Branch::moebius(0, 1, 1, 2));
    }

    #[test]
    fn doubling_eps_too_large() {
        let e = load_system("system=doubling_eps\neps=0.3").unwrap_err();
        assert!(matches!(e, SystemError::ExpansionViolation { .. } | SystemError::ParseError(_)));
        assert!(load_system("system=doubling_eps\neps=0.05").is_ok());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(load_system("system=lanford\nfoo=1"), Err(SystemError::ParseError(_))));
        assert!(matches!(load_system("system=nope"), Err(SystemError::ParseError(_))));
        assert!(matches!(load_system("eps=0.1"), Err(SystemError::ParseError(_))));
    }

    #[test]
    fn custom_moebius_and_invariance() {
        let ok = "system=custom\nbranch.0.moebius=0,1,1,1\nbranch.1.moebius=0,1,1,2\ndisc.center=1\ndisc.radius=1.5";
        assert_eq!(load_system(ok).unwrap().branches.len(), 2);
        let bad = "system=custom\nbranch.0.moebius=2,0,0,1\ndisc.center=0\ndisc.radius=1";
        assert!(matches!(load_system(bad), Err(SystemError::DiscNotInvariant { .. })));
    }

    #[test]
    fn markov_rows() {
        let s = load_system("system=e2\nmarkov.row.1=1,1\nmarkov.row.2=1,0").unwrap();
        assert!(s.admissible(0, 1) && !s.admissible(1, 1));
    }

    #[test]
    fn complex_parameter_forms() {
        assert_eq!(parse_complex("0.05+0.1i").unwrap(), (q(1, 20), q(1, 10)));
        assert_eq!(parse_complex("0.05-0.1i").unwrap(), (q(1, 20), q(-1, 10)));
        assert_eq!(parse_complex("-0.1").unwrap(), (q(-1, 10), q(0, 1)));
        assert_eq!(parse_complex("0.1,0.2").unwrap(), (q(1, 10), q(1, 5)));
        assert!(load_system("system=quadratic_julia\nc=0.3").is_err());
    }

    #[test]
    fn builtin_names() {
        assert!(builtin_config("e2").is_ok());
        assert!(builtin_config("cf_digits:1,2,3").unwrap().contains("[1,2,3]"));
        assert!(builtin_config("mystery").is_err());
    }
}
