//! Random acyclic class catalogs with an independent path enumerator.

use std::collections::BTreeSet;
use std::fmt::Write;

use rand::rngs::StdRng;
use rand::Rng;

const SCALARS: [&str; 5] = ["INTEGER", "FLOAT", "STRING", "BOOL", "DATETIME"];

#[derive(Debug, Clone)]
pub enum Ty {
    Scalar(&'static str),
    Ref(usize),
    Set(Vec<(String, Ty)>),
    Tuple(Vec<(String, Ty)>),
}

#[derive(Debug, Clone)]
pub struct GenClass {
    pub name: String,
    pub parent: Option<usize>,
    pub components: Vec<(String, Ty)>,
    pub methods: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct GenCatalog {
    pub classes: Vec<GenClass>,
}

/// Classes only reference and extend classes defined before them, so no
/// dereference chain can come back to a class already on it. Every path
/// has at most `MAX_DEPTH` names, counting both descents into relations or
/// tuples and dereferences; each level has at most five components and
/// tuples hold scalars and references only.
pub fn random_catalog(rng: &mut StdRng) -> GenCatalog {
    let n = rng.gen_range(1..=4);
    let mut gen = GenCatalog { classes: Vec::with_capacity(n) };
    let mut heights: Vec<usize> = Vec::with_capacity(n);
    for i in 0..n {
        let parent = if i > 0 && rng.gen_bool(0.25) { Some(rng.gen_range(0..i)) } else { None };
        let mut counter = 0;
        let components = fields(rng, i, 1, &heights, &mut counter);
        let methods = (0..rng.gen_range(0..=1)).map(|k| format!("m{i}_{k}")).collect();
        gen.classes.push(GenClass { name: format!("K{i}"), parent, components, methods });
        heights.push(gen.paths(i).iter().map(|p| p.split('.').count()).max().unwrap_or(0));
    }
    gen
}

pub const MAX_DEPTH: usize = 4;

/// Components at nesting `level` (1 is the class body). `heights[t]` is the
/// longest path below class `t`, so a reference at `level` reaches
/// `level + heights[t]` names.
fn fields(rng: &mut StdRng, class: usize, level: usize, heights: &[usize], counter: &mut usize) -> Vec<(String, Ty)> {
    let count = rng.gen_range(1..=5);
    (0..count)
        .map(|_| {
            *counter += 1;
            let name = format!("c{class}_{counter}");
            let roll = rng.gen_range(0..10);
            let targets: Vec<usize> = (0..class).filter(|&t| level + heights[t] <= MAX_DEPTH).collect();
            let ty = if roll < 3 && !targets.is_empty() {
                Ty::Ref(targets[rng.gen_range(0..targets.len())])
            } else if roll < 5 && level < MAX_DEPTH {
                Ty::Set(fields(rng, class, level + 1, heights, counter))
            } else if roll < 6 && level < MAX_DEPTH {
                Ty::Tuple(fields(rng, class, MAX_DEPTH, heights, counter))
            } else {
                Ty::Scalar(SCALARS[rng.gen_range(0..SCALARS.len())])
            };
            (name, ty)
        })
        .collect()
}

impl GenCatalog {
    pub fn script(&self) -> String {
        let mut out = String::new();
        for class in &self.classes {
            write!(out, "CREATE CLASS {}", class.name).unwrap();
            if let Some(p) = class.parent {
                write!(out, " EXTEND {}", self.classes[p].name).unwrap();
            }
            out.push_str("\n{\n");
            self.write_fields(&mut out, &class.components, 1);
            for m in &class.methods {
                writeln!(out, "  {m}(x INTEGER) BOOL;").unwrap();
            }
            out.push_str("}..\n");
        }
        out
    }

    fn write_fields(&self, out: &mut String, fields: &[(String, Ty)], indent: usize) {
        let pad = "  ".repeat(indent);
        for (name, ty) in fields {
            match ty {
                Ty::Scalar(s) => writeln!(out, "{pad}{name} {s};").unwrap(),
                Ty::Ref(t) => writeln!(out, "{pad}{name} {};", self.classes[*t].name).unwrap(),
                Ty::Set(inner) | Ty::Tuple(inner) => {
                    let kw = if matches!(ty, Ty::Set(_)) { "SET OF" } else { "TUPLE" };
                    writeln!(out, "{pad}{name} {kw}\n{pad}{{").unwrap();
                    self.write_fields(out, inner, indent + 1);
                    writeln!(out, "{pad}}}..").unwrap();
                }
            }
        }
    }

    /// Data components of a class including inherited ones, root class first.
    pub fn effective(&self, class: usize) -> Vec<(String, Ty)> {
        let c = &self.classes[class];
        let mut out = c.parent.map(|p| self.effective(p)).unwrap_or_default();
        out.extend(c.components.iter().cloned());
        out
    }

    /// Every correct path expression below `class`, as dotted suffixes.
    pub fn paths(&self, class: usize) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.walk(&self.effective(class), "", &mut out);
        out
    }

    fn walk(&self, fields: &[(String, Ty)], prefix: &str, out: &mut BTreeSet<String>) {
        for (name, ty) in fields {
            let path = format!("{prefix}{name}");
            match ty {
                Ty::Scalar(_) => {
                    out.insert(path);
                }
                Ty::Ref(t) => {
                    out.insert(path.clone());
                    self.walk(&self.effective(*t), &format!("{path}."), out);
                }
                Ty::Set(inner) | Ty::Tuple(inner) => self.walk(inner, &format!("{path}."), out),
            }
        }
    }

    /// Prefixes that navigate into a relation, tuple or reference: the
    /// names a derived relation may carry below the class name.
    pub fn navigable_prefixes(&self, class: usize) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.walk_prefixes(&self.effective(class), "", &mut out);
        out
    }

    fn walk_prefixes(&self, fields: &[(String, Ty)], prefix: &str, out: &mut BTreeSet<String>) {
        for (name, ty) in fields {
            let path = format!("{prefix}{name}");
            let inner = match ty {
                Ty::Scalar(_) => continue,
                Ty::Ref(t) => self.effective(*t),
                Ty::Set(inner) | Ty::Tuple(inner) => inner.clone(),
            };
            out.insert(path.clone());
            self.walk_prefixes(&inner, &format!("{path}."), out);
        }
    }
}

/// Checks the naming rule on a generated catalog in both directions:
/// every split of every path finds its relation and attribute, and every
/// derived relation and attribute is backed by a path. Returns the number
/// of splits checked.
pub fn check_closure(gen: &GenCatalog) -> Result<usize, String> {
    use rxo::namespace::{derive_relations, enumerate_paths, NamespaceIndex};

    let mut session = rxo::Session::new();
    let mut out = String::new();
    session.run_source(&gen.script(), &mut out).map_err(|e| format!("{e}\n{}", gen.script()))?;
    let catalog = session.database().catalog();
    let index = NamespaceIndex::global(catalog);
    let mut checked = 0;
    for (i, class) in gen.classes.iter().enumerate() {
        let paths = gen.paths(i);
        let enumerated: BTreeSet<String> = enumerate_paths(catalog, &class.name)
            .map_err(|e| e.to_string())?
            .iter()
            .map(|p| p.segments.join("."))
            .collect();
        if enumerated != paths {
            return Err(format!("{}: paths {enumerated:?}, expected {paths:?}", class.name));
        }
        for path in &paths {
            let segments: Vec<&str> = path.split('.').collect();
            for cut in 0..segments.len() {
                let mut relation = class.name.clone();
                for s in &segments[..cut] {
                    relation.push('.');
                    relation.push_str(s);
                }
                let attribute = segments[cut..].join(".");
                let schema = index.get(&relation).ok_or_else(|| format!("no relation {relation} for {path}"))?;
                if schema.ref_attribute != class.name {
                    return Err(format!("{relation} has reference attribute {}", schema.ref_attribute));
                }
                if !schema.attributes.iter().any(|a| a.name == attribute) {
                    return Err(format!("{relation} lacks attribute {attribute}"));
                }
                checked += 1;
            }
        }
        let prefixes = gen.navigable_prefixes(i);
        for schema in derive_relations(catalog, &class.name).map_err(|e| e.to_string())? {
            let prefix = schema.prefix.join(".");
            if !prefix.is_empty() && !prefixes.contains(&prefix) {
                return Err(format!("relation {} has no justifying path", schema.name));
            }
            for a in &schema.attributes {
                let full = if prefix.is_empty() { a.name.clone() } else { format!("{prefix}.{}", a.name) };
                if !paths.contains(&full) {
                    return Err(format!("attribute {} of {} has no justifying path", a.name, schema.name));
                }
            }
        }
    }
    Ok(checked)
}
