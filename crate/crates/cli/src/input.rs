use std::path::Path;
use std::sync::Arc;

use renormlab::exact::parse_rational;
use renormlab::tree::{FiniteTreeDoc, PresentationDoc, UnfoldOptions};
use renormlab::weights::WeightFn;
use renormlab::{Error, FiniteTree, Rational, Result, TreeFn, TreePresentation};
use serde_json::Value;

pub fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

/// A report's `results.<key>` if the document is a report, else the document.
fn unwrap_report<'a>(doc: &'a Value, key: &str) -> &'a Value {
    if doc.get("schema_version").is_some() {
        if let Some(v) = doc.get("results").and_then(|r| r.get(key)) {
            return v;
        }
    }
    doc
}

pub enum Source {
    Presentation(Arc<TreePresentation>),
    Tree(FiniteTree),
}

impl Source {
    pub fn load(path: &Path) -> Result<Source> {
        let doc = read_json(path)?;
        let doc = unwrap_report(&doc, "tree");
        if doc.get("classes").is_some() {
            let p: PresentationDoc = serde_json::from_value(doc.clone())?;
            Ok(Source::Presentation(Arc::new(TreePresentation::from_doc(&p)?)))
        } else if doc.get("nodes").is_some() {
            let t: FiniteTreeDoc = serde_json::from_value(doc.clone())?;
            Ok(Source::Tree(FiniteTree::from_doc(&t)?))
        } else {
            Err(Error::Parse(format!(
                "{}: expected a presentation (`classes`) or a finite tree (`nodes`)",
                path.display()
            )))
        }
    }

    pub fn presentation(&self) -> &TreePresentation {
        match self {
            Source::Presentation(p) => p,
            Source::Tree(t) => t.presentation(),
        }
    }

    pub fn presentation_arc(&self) -> Arc<TreePresentation> {
        match self {
            Source::Presentation(p) => p.clone(),
            Source::Tree(t) => t.presentation_arc(),
        }
    }

    /// The finite tree itself, or the unfolding of a presentation.
    pub fn finite(&self, opts: UnfoldOptions) -> Result<FiniteTree> {
        match self {
            Source::Presentation(p) => renormlab::tree::unfold(p, opts),
            Source::Tree(t) => Ok(t.clone()),
        }
    }
}

fn rationals(values: &[Value]) -> Result<Vec<Rational>> {
    values
        .iter()
        .map(|v| match v {
            Value::String(s) => parse_rational(s),
            Value::Number(n) if n.is_i64() => Ok(Rational::from_integer(n.as_i64().expect("i64").into())),
            other => Err(Error::Parse(format!("expected a \"p/q\" string, found {other}"))),
        })
        .collect()
}

/// Weight file: an object from class id to `"p/q"`, or an array of `"p/q"`
/// in class order. Without a file the presentation's embedded `rho` is used.
pub fn load_weight(path: Option<&Path>, p: &TreePresentation) -> Result<WeightFn> {
    let Some(path) = path else {
        return WeightFn::embedded(p);
    };
    let doc = read_json(path)?;
    match unwrap_report(&doc, "weight") {
        Value::Array(values) => {
            let rho = rationals(values)?;
            if rho.len() != p.len() {
                return Err(Error::InvalidWeight(format!(
                    "{} values for {} classes",
                    rho.len(),
                    p.len()
                )));
            }
            Ok(WeightFn::new(rho))
        }
        Value::Object(_) => WeightFn::parse(p, &unwrap_report(&doc, "weight").to_string()),
        other => Err(Error::Parse(format!("weight file holds {other}"))),
    }
}

/// A function given inline as `a,b,c` or as a JSON array file.
pub fn load_function(values: Option<&str>, path: Option<&Path>, len: usize) -> Result<TreeFn> {
    let parsed = match (values, path) {
        (Some(text), _) => text.split(',').map(parse_rational).collect::<Result<Vec<_>>>()?,
        (None, Some(path)) => {
            let doc = read_json(path)?;
            match unwrap_report(&doc, "f") {
                Value::Array(values) => rationals(values)?,
                other => return Err(Error::Parse(format!("function file holds {other}"))),
            }
        }
        (None, None) => return Err(Error::Parse("a function is required (--values or --f)".into())),
    };
    if parsed.len() != len {
        return Err(Error::Parse(format!("{} values for {len} nodes", parsed.len())));
    }
    Ok(TreeFn::from_values(parsed))
}
