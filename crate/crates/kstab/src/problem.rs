//! Problem files: a JSON schema binding root data, a polytope description,
//! and solver options, with JSON-pointer diagnostics and a canonical
//! serializer that round-trips every catalog entry.

use std::path::Path;

use num::{BigInt, Zero};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result, SchemaError};
use crate::rat::{format_rat, Int, QMat, QVec, Rat};
use crate::root_datum::{Colour, ColourType, RootDatum};

#[derive(Debug, Clone, PartialEq)]
pub enum PolytopeBlock {
    /// Halfspaces of the full invariant polytope.
    Halfspaces(Vec<(QVec, Rat)>),
    /// Halfspaces of the dominant part, to be extended by reflections.
    Chamber(Vec<(QVec, Rat)>),
    /// Boundary divisor rays with coefficients.
    Divisor { rays: Vec<(Vec<Int>, Rat)>, strict_colours: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemOptions {
    /// Expected anticanonical normalization; checked when set.
    pub fano: Option<bool>,
    /// Denominator of the rational direction net used by scans.
    pub net_denominator: i64,
    /// Residual tolerance of the soliton solve.
    pub tolerance: f64,
    /// Whether a central translation may normalize facet offsets.
    pub shift: bool,
}

impl Default for ProblemOptions {
    fn default() -> Self {
        ProblemOptions { fano: None, net_denominator: 2, tolerance: 1e-10, shift: true }
    }
}

#[derive(Debug, Clone)]
pub struct ProblemFile {
    pub root_datum: RootDatum,
    pub polytope: PolytopeBlock,
    pub options: ProblemOptions,
}

struct Collector {
    errors: Vec<SchemaError>,
}

impl Collector {
    fn new() -> Self {
        Collector { errors: vec![] }
    }

    fn push(&mut self, pointer: &str, message: impl Into<String>) {
        self.errors.push(SchemaError { pointer: pointer.to_string(), message: message.into() });
    }

    fn finish(self) -> Result<()> {
        if self.errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Schema(self.errors))
        }
    }
}

/// Parses `"p/q"` or `"p"` with arbitrary-precision integers.
pub fn parse_rat(text: &str) -> Option<Rat> {
    let mut parts = text.trim().splitn(2, '/');
    let num: BigInt = parts.next()?.trim().parse().ok()?;
    match parts.next() {
        None => Some(Rat::from_integer(num)),
        Some(d) => {
            let den: BigInt = d.trim().parse().ok()?;
            if den.is_zero() {
                None
            } else {
                Some(Rat::new(num, den))
            }
        }
    }
}

fn rat_at(v: &Value, ptr: &str, errs: &mut Collector) -> Rat {
    match v.as_str().and_then(parse_rat) {
        Some(r) => r,
        None => {
            errs.push(ptr, "expected a rational string \"p/q\"");
            Rat::zero()
        }
    }
}

fn vec_at(v: &Value, ptr: &str, rank: usize, errs: &mut Collector) -> QVec {
    match v.as_array() {
        Some(arr) if arr.len() == rank => arr
            .iter()
            .enumerate()
            .map(|(i, c)| rat_at(c, &format!("{ptr}/{i}"), errs))
            .collect(),
        _ => {
            errs.push(ptr, format!("expected an array of {rank} rational strings"));
            vec![Rat::zero(); rank]
        }
    }
}

fn vec_list_at(v: &Value, ptr: &str, rank: usize, errs: &mut Collector) -> Vec<QVec> {
    match v.as_array() {
        Some(arr) => arr
            .iter()
            .enumerate()
            .map(|(i, row)| vec_at(row, &format!("{ptr}/{i}"), rank, errs))
            .collect(),
        None => {
            errs.push(ptr, "expected an array of vectors");
            vec![]
        }
    }
}

fn halfspaces_at(v: &Value, ptr: &str, rank: usize, errs: &mut Collector) -> Vec<(QVec, Rat)> {
    let arr = match v.as_array() {
        Some(a) => a,
        None => {
            errs.push(ptr, "expected an array of halfspaces");
            return vec![];
        }
    };
    arr.iter()
        .enumerate()
        .map(|(i, h)| {
            let hp = format!("{ptr}/{i}");
            let obj = match h.as_object() {
                Some(o) => o,
                None => {
                    errs.push(&hp, "expected an object with normal and offset");
                    return (vec![Rat::zero(); rank], Rat::zero());
                }
            };
            let normal = match obj.get("normal") {
                Some(n) => vec_at(n, &format!("{hp}/normal"), rank, errs),
                None => {
                    errs.push(&format!("{hp}/normal"), "missing");
                    vec![Rat::zero(); rank]
                }
            };
            let offset = match obj.get("offset") {
                Some(o) => rat_at(o, &format!("{hp}/offset"), errs),
                None => {
                    errs.push(&format!("{hp}/offset"), "missing");
                    Rat::zero()
                }
            };
            (normal, offset)
        })
        .collect()
}

fn gram_at(v: &Value, ptr: &str, rank: usize, errs: &mut Collector) -> QMat {
    let rows = vec_list_at(v, ptr, rank, errs);
    if rows.len() == rank {
        rows
    } else {
        errs.push(ptr, format!("expected a {rank} x {rank} matrix"));
        crate::rat::identity(rank)
    }
}

fn root_datum_at(v: &Value, errs: &mut Collector) -> Option<RootDatum> {
    let obj = match v.as_object() {
        Some(o) => o,
        None => {
            errs.push("/root_datum", "expected an object");
            return None;
        }
    };
    let rank = match obj.get("rank").and_then(Value::as_u64) {
        Some(r) if r >= 1 => r as usize,
        _ => {
            errs.push("/root_datum/rank", "expected a positive integer");
            return None;
        }
    };
    let gram = match obj.get("gram") {
        Some(g) => gram_at(g, "/root_datum/gram", rank, errs),
        None => {
            errs.push("/root_datum/gram", "missing");
            crate::rat::identity(rank)
        }
    };
    let roots = match obj.get("restricted_roots") {
        Some(r) => vec_list_at(r, "/root_datum/restricted_roots", rank, errs),
        None => {
            errs.push("/root_datum/restricted_roots", "missing");
            vec![]
        }
    };
    let two_rho = match obj.get("two_rho") {
        Some(t) => vec_at(t, "/root_datum/two_rho", rank, errs),
        None => {
            errs.push("/root_datum/two_rho", "missing");
            vec![Rat::zero(); rank]
        }
    };
    let simples = match obj.get("spherical_simple_roots") {
        Some(s) => vec_list_at(s, "/root_datum/spherical_simple_roots", rank, errs),
        None => {
            errs.push("/root_datum/spherical_simple_roots", "missing");
            vec![]
        }
    };
    let mut colours = vec![];
    if let Some(cs) = obj.get("colours") {
        match cs.as_array() {
            Some(arr) => {
                for (i, c) in arr.iter().enumerate() {
                    let cp = format!("/root_datum/colours/{i}");
                    let cobj = match c.as_object() {
                        Some(o) => o,
                        None => {
                            errs.push(&cp, "expected an object");
                            continue;
                        }
                    };
                    let image = match cobj.get("image") {
                        Some(im) => vec_at(im, &format!("{cp}/image"), rank, errs),
                        None => {
                            errs.push(&format!("{cp}/image"), "missing");
                            continue;
                        }
                    };
                    let kind = match cobj.get("kind").and_then(Value::as_str) {
                        Some("2a") => ColourType::TwoA,
                        Some("b") => ColourType::B,
                        Some("external") => ColourType::External,
                        _ => {
                            errs.push(&format!("{cp}/kind"), "expected \"2a\", \"b\" or \"external\"");
                            continue;
                        }
                    };
                    colours.push(Colour { image, kind });
                }
            }
            None => errs.push("/root_datum/colours", "expected an array"),
        }
    }
    for key in obj.keys() {
        if !matches!(
            key.as_str(),
            "rank" | "gram" | "restricted_roots" | "two_rho" | "spherical_simple_roots" | "colours"
        ) {
            errs.push(&format!("/root_datum/{key}"), "unknown field");
        }
    }
    Some(RootDatum { rank, gram, restricted_roots: roots, two_rho, simple_roots: simples, colours })
}

fn polytope_at(v: &Value, rank: usize, errs: &mut Collector) -> PolytopeBlock {
    let obj = match v.as_object() {
        Some(o) => o,
        None => {
            errs.push("/polytope", "expected an object");
            return PolytopeBlock::Halfspaces(vec![]);
        }
    };
    let keys: Vec<&str> = ["halfspaces", "chamber_halfspaces", "divisor"]
        .into_iter()
        .filter(|k| obj.contains_key(*k))
        .collect();
    if keys.len() != 1 {
        errs.push(
            "/polytope",
            "expected exactly one of halfspaces, chamber_halfspaces, divisor",
        );
        return PolytopeBlock::Halfspaces(vec![]);
    }
    match keys[0] {
        "halfspaces" => PolytopeBlock::Halfspaces(halfspaces_at(
            &obj["halfspaces"],
            "/polytope/halfspaces",
            rank,
            errs,
        )),
        "chamber_halfspaces" => PolytopeBlock::Chamber(halfspaces_at(
            &obj["chamber_halfspaces"],
            "/polytope/chamber_halfspaces",
            rank,
            errs,
        )),
        _ => {
            let d = &obj["divisor"];
            let dobj = match d.as_object() {
                Some(o) => o,
                None => {
                    errs.push("/polytope/divisor", "expected an object");
                    return PolytopeBlock::Halfspaces(vec![]);
                }
            };
            let mut rays = vec![];
            match dobj.get("rays").and_then(Value::as_array) {
                Some(arr) => {
                    for (i, r) in arr.iter().enumerate() {
                        let rp = format!("/polytope/divisor/rays/{i}");
                        let robj = match r.as_object() {
                            Some(o) => o,
                            None => {
                                errs.push(&rp, "expected an object");
                                continue;
                            }
                        };
                        let prim = match robj.get("ray") {
                            Some(u) => vec_at(u, &format!("{rp}/ray"), rank, errs),
                            None => {
                                errs.push(&format!("{rp}/ray"), "missing");
                                continue;
                            }
                        };
                        let mut ints = vec![];
                        let mut ok = true;
                        for (j, c) in prim.iter().enumerate() {
                            if c.is_integer() {
                                ints.push(c.to_integer());
                            } else {
                                errs.push(&format!("{rp}/ray/{j}"), "expected an integer");
                                ok = false;
                            }
                        }
                        let coeff = match robj.get("coefficient") {
                            Some(c) => rat_at(c, &format!("{rp}/coefficient"), errs),
                            None => {
                                errs.push(&format!("{rp}/coefficient"), "missing");
                                Rat::zero()
                            }
                        };
                        if ok {
                            rays.push((ints, coeff));
                        }
                    }
                }
                None => errs.push("/polytope/divisor/rays", "expected an array"),
            }
            let strict = dobj.get("strict_colours").and_then(Value::as_bool).unwrap_or(true);
            PolytopeBlock::Divisor { rays, strict_colours: strict }
        }
    }
}

fn options_at(v: Option<&Value>, errs: &mut Collector) -> ProblemOptions {
    let mut opts = ProblemOptions::default();
    let obj = match v {
        None => return opts,
        Some(o) => match o.as_object() {
            Some(o) => o,
            None => {
                errs.push("/options", "expected an object");
                return opts;
            }
        },
    };
    if let Some(f) = obj.get("fano") {
        match f.as_bool() {
            Some(b) => opts.fano = Some(b),
            None => errs.push("/options/fano", "expected a boolean"),
        }
    }
    if let Some(n) = obj.get("net_denominator") {
        match n.as_i64() {
            Some(d) if d >= 1 => opts.net_denominator = d,
            _ => errs.push("/options/net_denominator", "expected a positive integer"),
        }
    }
    if let Some(t) = obj.get("tolerance") {
        match t.as_f64() {
            Some(x) if x > 0.0 => opts.tolerance = x,
            _ => errs.push("/options/tolerance", "expected a positive number"),
        }
    }
    if let Some(s) = obj.get("shift") {
        match s.as_bool() {
            Some(b) => opts.shift = b,
            None => errs.push("/options/shift", "expected a boolean"),
        }
    }
    for key in obj.keys() {
        if !matches!(key.as_str(), "fano" | "net_denominator" | "tolerance" | "shift") {
            errs.push(&format!("/options/{key}"), "unknown field");
        }
    }
    opts
}

pub fn parse_value(v: &Value) -> Result<ProblemFile> {
    let mut errs = Collector::new();
    let obj = match v.as_object() {
        Some(o) => o,
        None => {
            errs.push("", "expected a top-level object");
            return errs.finish().map(|_| unreachable!());
        }
    };
    let rd = match obj.get("root_datum") {
        Some(r) => root_datum_at(r, &mut errs),
        None => {
            errs.push("/root_datum", "missing");
            None
        }
    };
    let rd = match rd {
        Some(rd) => rd,
        None => return errs.finish().map(|_| unreachable!()),
    };
    let polytope = match obj.get("polytope") {
        Some(p) => polytope_at(p, rd.rank, &mut errs),
        None => {
            errs.push("/polytope", "missing");
            PolytopeBlock::Halfspaces(vec![])
        }
    };
    let options = options_at(obj.get("options"), &mut errs);
    for key in obj.keys() {
        if !matches!(key.as_str(), "root_datum" | "polytope" | "options") {
            errs.push(&format!("/{key}"), "unknown field");
        }
    }
    if errs.errors.is_empty() {
        if let Err(e) = rd.validate() {
            errs.push("/root_datum", e.to_string());
        }
    }
    errs.finish()?;
    Ok(ProblemFile { root_datum: rd, polytope, options })
}

pub fn parse_str(text: &str) -> Result<ProblemFile> {
    let v: Value = serde_json::from_str(text)?;
    parse_value(&v)
}

pub fn parse(path: &Path) -> Result<ProblemFile> {
    let text = std::fs::read_to_string(path)?;
    parse_str(&text)
}

fn rat_str(r: &Rat) -> Value {
    Value::String(format_rat(r))
}

fn vec_json(v: &[Rat]) -> Value {
    Value::Array(v.iter().map(rat_str).collect())
}

fn halfspaces_json(hs: &[(QVec, Rat)]) -> Value {
    Value::Array(
        hs.iter()
            .map(|(n, o)| json!({ "normal": vec_json(n), "offset": rat_str(o) }))
            .collect(),
    )
}

/// Canonical serialization; `parse(to_json(pf))` reproduces `pf`.
pub fn to_json(pf: &ProblemFile) -> Value {
    let rd = &pf.root_datum;
    let mut rd_obj = Map::new();
    rd_obj.insert("rank".into(), json!(rd.rank));
    rd_obj.insert(
        "gram".into(),
        Value::Array(rd.gram.iter().map(|row| vec_json(row)).collect()),
    );
    rd_obj.insert(
        "restricted_roots".into(),
        Value::Array(rd.restricted_roots.iter().map(|r| vec_json(r)).collect()),
    );
    rd_obj.insert("two_rho".into(), vec_json(&rd.two_rho));
    rd_obj.insert(
        "spherical_simple_roots".into(),
        Value::Array(rd.simple_roots.iter().map(|r| vec_json(r)).collect()),
    );
    if !rd.colours.is_empty() {
        rd_obj.insert(
            "colours".into(),
            Value::Array(
                rd.colours
                    .iter()
                    .map(|c| {
                        json!({
                            "image": vec_json(&c.image),
                            "kind": match c.kind {
                                ColourType::TwoA => "2a",
                                ColourType::B => "b",
                                ColourType::External => "external",
                            },
                        })
                    })
                    .collect(),
            ),
        );
    }
    let polytope = match &pf.polytope {
        PolytopeBlock::Halfspaces(hs) => json!({ "halfspaces": halfspaces_json(hs) }),
        PolytopeBlock::Chamber(hs) => json!({ "chamber_halfspaces": halfspaces_json(hs) }),
        PolytopeBlock::Divisor { rays, strict_colours } => json!({
            "divisor": {
                "rays": Value::Array(
                    rays.iter()
                        .map(|(u, c)| {
                            json!({
                                "ray": Value::Array(
                                    u.iter().map(|x| Value::String(x.to_string())).collect(),
                                ),
                                "coefficient": rat_str(c),
                            })
                        })
                        .collect(),
                ),
                "strict_colours": strict_colours,
            }
        }),
    };
    let defaults = ProblemOptions::default();
    let mut opt_obj = Map::new();
    if let Some(f) = pf.options.fano {
        opt_obj.insert("fano".into(), json!(f));
    }
    if pf.options.net_denominator != defaults.net_denominator {
        opt_obj.insert("net_denominator".into(), json!(pf.options.net_denominator));
    }
    if pf.options.tolerance != defaults.tolerance {
        opt_obj.insert("tolerance".into(), json!(pf.options.tolerance));
    }
    if pf.options.shift != defaults.shift {
        opt_obj.insert("shift".into(), json!(pf.options.shift));
    }
    let mut top = Map::new();
    top.insert("root_datum".into(), Value::Object(rd_obj));
    top.insert("polytope".into(), polytope);
    if !opt_obj.is_empty() {
        top.insert("options".into(), Value::Object(opt_obj));
    }
    Value::Object(top)
}

/// The bundled example catalog, name to problem JSON.
pub fn catalog() -> Vec<(&'static str, &'static str)> {
    vec![
        ("toric_square", include_str!("../catalog/toric_square.json")),
        ("toric_rect", include_str!("../catalog/toric_rect.json")),
        ("toric_f1", include_str!("../catalog/toric_f1.json")),
        ("rank2_kstable", include_str!("../catalog/rank2_kstable.json")),
        ("rank2_strict_ss", include_str!("../catalog/rank2_strict_ss.json")),
        ("a1a1_group", include_str!("../catalog/a1a1_group.json")),
        ("a2_hexagon", include_str!("../catalog/a2_hexagon.json")),
        ("nonconvex_extension", include_str!("../catalog/nonconvex_extension.json")),
    ]
}

pub fn catalog_entry(name: &str) -> Option<&'static str> {
    catalog().into_iter().find(|(n, _)| *n == name).map(|(_, t)| t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;

    #[test]
    fn rational_strings_parse() {
        assert_eq!(parse_rat("4/3"), Some(rat(4, 3)));
        assert_eq!(parse_rat("-7"), Some(rat(-7, 1)));
        assert_eq!(parse_rat(" 1 / 2 "), Some(rat(1, 2)));
        assert_eq!(parse_rat("1/0"), None);
        assert_eq!(parse_rat("x"), None);
        assert_eq!(parse_rat("1.5"), None);
    }

    #[test]
    fn catalog_entries_parse_and_round_trip() {
        for (name, text) in catalog() {
            let pf = parse_str(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            let serialized = serde_json::to_string_pretty(&to_json(&pf)).unwrap();
            let pf2 = parse_str(&serialized).unwrap();
            assert_eq!(to_json(&pf), to_json(&pf2), "{name} does not round-trip");
        }
    }

    #[test]
    fn toric_square_shape() {
        let pf = parse_str(catalog_entry("toric_square").unwrap()).unwrap();
        assert_eq!(pf.root_datum.rank, 2);
        assert!(pf.root_datum.restricted_roots.is_empty());
        match &pf.polytope {
            PolytopeBlock::Halfspaces(hs) => assert_eq!(hs.len(), 4),
            other => panic!("unexpected block {other:?}"),
        }
        assert_eq!(pf.options.fano, Some(true));
    }

    #[test]
    fn strict_ss_model_parses() {
        let pf = parse_str(catalog_entry("rank2_strict_ss").unwrap()).unwrap();
        assert_eq!(pf.root_datum.simple_roots.len(), 1);
        assert_eq!(pf.root_datum.two_rho, vec![rat(1, 1), rat(0, 1)]);
    }

    #[test]
    fn bad_gram_is_a_schema_error() {
        let text = r#"{
            "root_datum": {
                "rank": 2,
                "gram": [["1","0"],["0","-1"]],
                "restricted_roots": [],
                "two_rho": ["0","0"],
                "spherical_simple_roots": []
            },
            "polytope": { "halfspaces": [] }
        }"#;
        match parse_str(text) {
            Err(Error::Schema(errs)) => {
                assert!(errs.iter().any(|e| e.pointer == "/root_datum"));
            }
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn schema_errors_carry_pointers() {
        let text = r#"{
            "root_datum": {
                "rank": 2,
                "gram": [["1","0"],["0","1"]],
                "restricted_roots": [["1","bogus"]],
                "two_rho": ["0","0"],
                "spherical_simple_roots": [],
                "extra": 1
            },
            "polytope": { "halfspaces": [{"normal": ["1","0"]}] },
            "options": { "net_denominator": 0 }
        }"#;
        match parse_str(text) {
            Err(Error::Schema(errs)) => {
                let ptrs: Vec<&str> = errs.iter().map(|e| e.pointer.as_str()).collect();
                assert!(ptrs.contains(&"/root_datum/restricted_roots/0/1"));
                assert!(ptrs.contains(&"/root_datum/extra"));
                assert!(ptrs.contains(&"/polytope/halfspaces/0/offset"));
                assert!(ptrs.contains(&"/options/net_denominator"));
            }
            other => panic!("expected schema error, got {other:?}"),
        }
    }
}
