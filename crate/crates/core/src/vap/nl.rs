//! Plain-text scene description for language-model prompting, and its
//! inverse.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grounding::{GroundingVector, Layout};

pub const OPTIONS: &str = "(A) Slow (B) Normal (C) Fast (D) Stop";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NlError {
    #[error("entity {query} not in a scene of {entities}")]
    UnknownAgent { query: usize, entities: usize },
    #[error("expected `{expected}` at byte {at}")]
    Expected { expected: String, at: usize },
    #[error("bad atom `{0}`")]
    BadAtom(String),
    #[error("scene does not match the layout: {0}")]
    Layout(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredSig {
    pub name: String,
    pub arity: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<usize>,
}

/// Closed-world truth table over `entities` agents: only true atoms are
/// listed, in predicate order and then by argument tuple.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scene {
    pub entities: usize,
    pub predicates: Vec<PredSig>,
    pub atoms: Vec<Atom>,
}

impl Scene {
    pub fn from_grounding(g: &GroundingVector) -> Self {
        let layout = &g.layout;
        Scene {
            entities: layout.slots,
            predicates: layout.entries.iter().map(|e| PredSig { name: e.predicate.clone(), arity: e.arity }).collect(),
            atoms: layout
                .schema()
                .into_iter()
                .filter(|s| g.values[s.index])
                .map(|s| Atom { predicate: s.predicate, args: s.tuple })
                .collect(),
        }
    }

    pub fn to_grounding(&self, layout: Arc<Layout>) -> Result<GroundingVector, NlError> {
        if layout.slots != self.entities {
            return Err(NlError::Layout(format!("{} entities, layout has {} slots", self.entities, layout.slots)));
        }
        let mut g = GroundingVector::zeros(layout.clone());
        for a in &self.atoms {
            let i = layout
                .index(&a.predicate, &a.args)
                .ok_or_else(|| NlError::Layout(format!("atom {}{:?} not in layout", a.predicate, a.args)))?;
            g.values[i] = true;
        }
        Ok(g)
    }

    pub fn holds(&self, predicate: &str, args: &[usize]) -> bool {
        self.atoms.iter().any(|a| a.predicate == predicate && a.args == args)
    }
}

fn entity(i: usize) -> String {
    format!("Entity_{i}")
}

fn join<I: IntoIterator<Item = String>>(items: I) -> String {
    items.into_iter().collect::<Vec<_>>().join(", ")
}

pub fn serialize_scene_nl(scene: &Scene, query: usize) -> Result<String, NlError> {
    if query >= scene.entities {
        return Err(NlError::UnknownAgent { query, entities: scene.entities });
    }
    let mut out = format!(
        "In the scene you see a total of {} entities, they are named as follows: {}. ",
        scene.entities,
        join((0..scene.entities).map(entity))
    );
    out += &format!(
        "There exist the following predicates as their attributes and relations: {}. ",
        join(scene.predicates.iter().map(|p| format!("{} (arity: {})", p.name, p.arity)))
    );
    if !scene.atoms.is_empty() {
        let atoms = scene.atoms.iter().map(|a| format!("{}({})", a.predicate, join(a.args.iter().map(|&i| entity(i)))));
        out += &format!(
            "The truth value of these predicates grounded to the entities are as follows \
             (Only the ones that are True are provided, assume the rest are False): {}. ",
            join(atoms)
        );
    }
    out += &format!("What is the next action of entity {}?\n{OPTIONS}\n", entity(query));
    Ok(out)
}

struct Cursor<'a> {
    s: &'a str,
    at: usize,
}

impl<'a> Cursor<'a> {
    fn rest(&self) -> &'a str {
        &self.s[self.at..]
    }

    fn eat(&mut self, lit: &str) -> bool {
        if self.rest().starts_with(lit) {
            self.at += lit.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, lit: &str) -> Result<(), NlError> {
        if self.eat(lit) {
            Ok(())
        } else {
            Err(NlError::Expected { expected: lit.to_string(), at: self.at })
        }
    }

    fn number(&mut self) -> Result<usize, NlError> {
        let len = self.rest().bytes().take_while(u8::is_ascii_digit).count();
        let n = self.rest()[..len].parse().map_err(|_| NlError::Expected { expected: "number".into(), at: self.at })?;
        self.at += len;
        Ok(n)
    }

    fn ident(&mut self) -> Result<&'a str, NlError> {
        let len = self.rest().bytes().take_while(|b| b.is_ascii_alphanumeric() || *b == b'_').count();
        if len == 0 {
            return Err(NlError::Expected { expected: "identifier".into(), at: self.at });
        }
        let id = &self.rest()[..len];
        self.at += len;
        Ok(id)
    }

    fn entity(&mut self) -> Result<usize, NlError> {
        self.expect("Entity_")?;
        self.number()
    }
}

/// Inverse of [`serialize_scene_nl`]: the scene and the queried entity.
pub fn parse_scene_nl(text: &str) -> Result<(Scene, usize), NlError> {
    let mut c = Cursor { s: text, at: 0 };
    c.expect("In the scene you see a total of ")?;
    let entities = c.number()?;
    c.expect(" entities, they are named as follows: ")?;
    for i in 0..entities {
        if i > 0 {
            c.expect(", ")?;
        }
        let at = c.at;
        if c.entity()? != i {
            return Err(NlError::Expected { expected: entity(i), at });
        }
    }
    c.expect(". There exist the following predicates as their attributes and relations: ")?;
    let mut predicates = Vec::new();
    loop {
        let name = c.ident()?.to_string();
        c.expect(" (arity: ")?;
        let arity = c.number()?;
        c.expect(")")?;
        if !(1..=2).contains(&arity) || predicates.iter().any(|p: &PredSig| p.name == name) {
            return Err(NlError::BadAtom(name));
        }
        predicates.push(PredSig { name, arity });
        if !c.eat(", ") {
            break;
        }
    }
    c.expect(". ")?;
    let mut atoms = Vec::new();
    if c.eat("The truth value of these predicates grounded to the entities are as follows (Only the ones that are True are provided, assume the rest are False): ") {
        loop {
            let start = c.at;
            let name = c.ident()?.to_string();
            c.expect("(")?;
            let mut args = vec![c.entity()?];
            while c.eat(", ") {
                args.push(c.entity()?);
            }
            c.expect(")")?;
            let sig = predicates.iter().find(|p| p.name == name);
            if sig.map(|p| p.arity) != Some(args.len()) || args.iter().any(|&a| a >= entities) {
                return Err(NlError::BadAtom(text[start..c.at].to_string()));
            }
            atoms.push(Atom { predicate: name, args });
            if !c.eat(", ") {
                break;
            }
        }
        c.expect(". ")?;
    }
    c.expect("What is the next action of entity ")?;
    let query = c.entity()?;
    c.expect("?\n")?;
    c.expect(OPTIONS)?;
    c.eat("\n");
    if !c.rest().is_empty() {
        return Err(NlError::Expected { expected: "end of text".into(), at: c.at });
    }
    if query >= entities {
        return Err(NlError::UnknownAgent { query, entities });
    }
    Ok((Scene { entities, predicates, atoms }, query))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scene() -> Scene {
        Scene {
            entities: 3,
            predicates: vec![PredSig { name: "IsCar".into(), arity: 1 }, PredSig { name: "IsClose".into(), arity: 2 }],
            atoms: vec![
                Atom { predicate: "IsCar".into(), args: vec![0] },
                Atom { predicate: "IsClose".into(), args: vec![0, 2] },
            ],
        }
    }

    #[test]
    fn round_trip() {
        let text = serialize_scene_nl(&scene(), 1).unwrap();
        assert!(text.starts_with("In the scene you see a total of 3 entities"));
        assert!(text.contains("IsClose(Entity_0, Entity_2). What is the next action of entity Entity_1?"));
        assert_eq!(parse_scene_nl(&text).unwrap(), (scene(), 1));
    }

    #[test]
    fn empty_truth_section_is_omitted() {
        let mut s = scene();
        s.atoms.clear();
        let text = serialize_scene_nl(&s, 0).unwrap();
        assert!(!text.contains("truth value"));
        assert_eq!(parse_scene_nl(&text).unwrap().0, s);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(serialize_scene_nl(&scene(), 3).is_err());
        let text = serialize_scene_nl(&scene(), 1).unwrap();
        assert!(parse_scene_nl(&text.replace("IsCar(Entity_0)", "IsCar(Entity_9)")).is_err());
        assert!(parse_scene_nl(&text.replace("IsCar(Entity_0)", "IsCar(Entity_0, Entity_1)")).is_err());
        assert!(parse_scene_nl(&text[..40]).is_err());
    }
}
