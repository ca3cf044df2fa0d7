use serde_json::{Map, Value};

use super::{GeneratorConfig, Rng, Size};
use crate::oas::PrimitiveType;
use crate::spec::{CompiledSpec, Format, PrimitiveSpec, SpecError, SpecRef, SpecRegistry};

/// Nesting limit for specs whose required properties recurse into themselves.
const MAX_DEPTH: usize = 64;

const ALPHANUMERIC: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GenError {
    #[error("could not generate a value for {spec} within {attempts} attempts")]
    GenerationExhausted { spec: String, attempts: u32 },
    #[error(transparent)]
    Spec(#[from] SpecError),
}

/// Draws one value for `spec`.
///
/// With mutations off the value always validates against the spec. Strings
/// follow `cfg.string_mix`, integers `cfg.int_mode`; string and array
/// lengths and integer magnitudes are bounded by `size`.
pub fn gen_value(
    registry: &SpecRegistry,
    spec: &SpecRef,
    cfg: &GeneratorConfig,
    rng: &mut Rng,
    size: Size,
) -> Result<Value, GenError> {
    Generator { registry, cfg }.value(&spec.name, rng, size.0, 0)
}

/// A string of `[a-zA-Z0-9]` or, with probability `cfg.string_mix`, of code
/// points `0..=cfg.charset_max`; length uniform in `0..=size`.
pub fn gen_string(cfg: &GeneratorConfig, rng: &mut Rng, size: u32) -> String {
    let len = rng.int_in(0, i64::from(size)) as usize;
    if rng.chance(cfg.string_mix) {
        (0..len).map(|_| any_char(cfg.charset_max, rng)).collect()
    } else {
        (0..len)
            .map(|_| ALPHANUMERIC[rng.index(ALPHANUMERIC.len())] as char)
            .collect()
    }
}

fn any_char(max: u32, rng: &mut Rng) -> char {
    loop {
        let code = rng.int_in(0, i64::from(max)) as u32;
        if let Some(c) = char::from_u32(code) {
            return c;
        }
    }
}

/// Builds a string from the pattern itself, repeats capped at `size`.
/// `None` when the pattern uses syntax the builder cannot handle.
fn pattern_string(re: &regex::Regex, rng: &mut Rng, size: u32) -> Option<String> {
    let hir = strip_anchors(regex_syntax::Parser::new().parse(re.as_str()).ok()?);
    let builder = rand_regex::Regex::with_hir(hir, size.max(1)).ok()?;
    let s: String = rand::Rng::sample(rng, &builder);
    re.is_match(&s).then_some(s)
}

/// Drops a leading `^`/`\A` and trailing `$`/`\z`; the result is checked
/// against the full pattern afterwards anyway.
fn strip_anchors(hir: regex_syntax::hir::Hir) -> regex_syntax::hir::Hir {
    use regex_syntax::hir::{Hir, HirKind, Look};
    match hir.kind() {
        HirKind::Look(Look::Start | Look::End) => Hir::empty(),
        HirKind::Concat(parts) => {
            let mut parts = parts.clone();
            if matches!(parts.first().map(Hir::kind), Some(HirKind::Look(Look::Start))) {
                parts.remove(0);
            }
            if matches!(parts.last().map(Hir::kind), Some(HirKind::Look(Look::End))) {
                parts.pop();
            }
            Hir::concat(parts)
        }
        _ => hir,
    }
}

/// A v4 UUID built from random bytes, rendered in canonical hyphenated form.
pub fn gen_uuid(rng: &mut Rng) -> String {
    uuid::Builder::from_random_bytes(rng.bytes::<16>())
        .into_uuid()
        .hyphenated()
        .to_string()
}

fn gen_date_time(rng: &mut Rng) -> String {
    // 1970-01-01 .. 2100-01-01
    let secs = rng.int_in(0, 4_102_444_799);
    chrono::DateTime::from_timestamp(secs, 0)
        .expect("timestamp in range")
        .to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// Integer range for the current draw: natural or signed magnitude bounded
/// by size, intersected with the schema bounds.
fn integer_range(prim: &PrimitiveSpec, natural: bool, size: u32) -> (i64, i64) {
    let size = i64::from(size);
    let (lo, hi) = if natural { (0, size) } else { (-size, size) };
    let lower = prim.lower().map(|m| m.ceil() as i64);
    let upper = prim.upper().map(|m| m.floor() as i64);
    let lo2 = lower.map_or(lo, |l| lo.max(l));
    let hi2 = upper.map_or(hi, |u| hi.min(u));
    if lo2 <= hi2 {
        return (lo2, hi2);
    }
    // The size window misses the bounds entirely: use the closest bound.
    match (lower, upper) {
        (Some(l), _) if l > hi => (l, l),
        (_, Some(u)) if u < lo => (u, u),
        (Some(l), Some(u)) => (l, u),
        _ => (lo, hi),
    }
}

fn number_range(prim: &PrimitiveSpec, natural: bool, size: u32) -> (f64, f64) {
    let size = f64::from(size);
    let (lo, hi) = if natural { (0.0, size) } else { (-size, size) };
    let lo2 = prim.lower().map_or(lo, |l| lo.max(l));
    let hi2 = prim.upper().map_or(hi, |u| hi.min(u));
    if lo2 <= hi2 {
        return (lo2, hi2);
    }
    match (prim.lower(), prim.upper()) {
        (Some(l), _) if l > hi => (l, l),
        (_, Some(u)) if u < lo => (u, u),
        (Some(l), Some(u)) => (l, u),
        _ => (lo, hi),
    }
}

struct Generator<'a> {
    registry: &'a SpecRegistry,
    cfg: &'a GeneratorConfig,
}

impl Generator<'_> {
    fn value(&self, name: &str, rng: &mut Rng, size: u32, depth: usize) -> Result<Value, GenError> {
        if depth > MAX_DEPTH {
            return Err(GenError::GenerationExhausted {
                spec: name.to_string(),
                attempts: 0,
            });
        }
        match self.registry.get(name)? {
            CompiledSpec::Primitive(prim) => self.primitive(name, prim, rng, size),
            CompiledSpec::Enum(values) => Ok(values[rng.index(values.len())].clone()),
            CompiledSpec::Array { items } => {
                let len = rng.int_in(0, i64::from(size)) as usize;
                let child = size / 2;
                (0..len)
                    .map(|_| self.value(items, rng, child, depth + 1))
                    .collect::<Result<Vec<_>, _>>()
                    .map(Value::Array)
            }
            CompiledSpec::Object {
                properties,
                required,
            } => {
                let mut map = Map::new();
                for (key, prop) in properties {
                    let include = required.contains(key) || (depth < MAX_DEPTH / 2 && rng.chance(0.5));
                    if include {
                        map.insert(key.clone(), self.value(prop, rng, size, depth + 1)?);
                    }
                }
                Ok(Value::Object(map))
            }
            CompiledSpec::Alias(_) => unreachable!("registry.get follows aliases"),
        }
    }

    fn primitive(
        &self,
        name: &str,
        prim: &PrimitiveSpec,
        rng: &mut Rng,
        size: u32,
    ) -> Result<Value, GenError> {
        match prim.ty {
            PrimitiveType::Boolean => Ok(Value::Bool(rng.chance(0.5))),
            PrimitiveType::Integer => {
                let natural = rng.chance(self.cfg.int_mode);
                let (lo, hi) = integer_range(prim, natural, size);
                Ok(Value::from(rng.int_in(lo, hi)))
            }
            PrimitiveType::Number => {
                let natural = rng.chance(self.cfg.int_mode);
                let (lo, hi) = number_range(prim, natural, size);
                Ok(Value::from(rng.float_in(lo, hi)))
            }
            PrimitiveType::String => match (prim.format, &prim.pattern) {
                (Some(Format::Uuid), _) => Ok(Value::String(gen_uuid(rng))),
                (Some(Format::DateTime), _) => Ok(Value::String(gen_date_time(rng))),
                (_, Some(re)) => {
                    if let Some(s) = pattern_string(re, rng, size) {
                        return Ok(Value::String(s));
                    }
                    for _ in 0..self.cfg.pattern_retries {
                        let s = gen_string(self.cfg, rng, size);
                        if re.is_match(&s) {
                            return Ok(Value::String(s));
                        }
                    }
                    Err(GenError::GenerationExhausted {
                        spec: name.to_string(),
                        attempts: self.cfg.pattern_retries,
                    })
                }
                _ => Ok(Value::String(gen_string(self.cfg, rng, size))),
            },
        }
    }
}
