//! Dense id maps between graph labels and embedding rows.

use std::collections::BTreeSet;
use std::io::{self, BufRead, Write};

use crate::kgstore::{Graph, Object, Relation};

use super::train::TrainingSet;

/// Labels in id order. Entity labels are graph ids, or JSON-quoted
/// strings for literal objects, which become nodes of their own.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IdMap {
    pub entities: Vec<String>,
    pub relations: Vec<String>,
}

impl IdMap {
    pub fn entity_id(&self, label: &str) -> Option<usize> {
        self.entities.binary_search_by(|l| l.as_str().cmp(label)).ok()
    }

    pub fn relation_id(&self, label: &str) -> Option<usize> {
        self.relations.binary_search_by(|l| l.as_str().cmp(label)).ok()
    }
}

fn object_label(o: &Object) -> String {
    match o {
        Object::Entity(id) => id.clone(),
        Object::Literal(s) => serde_json::to_string(s).expect("strings serialize"),
    }
}

/// Maps a graph to training triples. Labels are sorted, so ids are
/// stable for a given graph. `relations` restricts the statements used;
/// `None` keeps all of them. Provenance duplicates collapse.
pub fn training_set(graph: &Graph, relations: Option<&[Relation]>) -> (TrainingSet, IdMap) {
    let keep = |r: Relation| relations.is_none_or(|rs| rs.contains(&r));
    let statements: BTreeSet<(String, Relation, String)> = graph
        .triples()
        .iter()
        .filter(|t| keep(t.predicate))
        .map(|t| (t.subject.clone(), t.predicate, object_label(&t.object)))
        .collect();
    let mut entities = BTreeSet::new();
    let mut rels = BTreeSet::new();
    for (s, p, o) in &statements {
        entities.insert(s.clone());
        entities.insert(o.clone());
        rels.insert(p.as_str().to_string());
    }
    let map = IdMap {
        entities: entities.into_iter().collect(),
        relations: rels.into_iter().collect(),
    };
    let triples = statements
        .iter()
        .map(|(s, p, o)| {
            (
                map.entity_id(s).expect("collected"),
                map.relation_id(p.as_str()).expect("collected"),
                map.entity_id(o).expect("collected"),
            )
        })
        .collect();
    (TrainingSet::new(map.entities.len(), map.relations.len(), triples), map)
}

/// `id<TAB>label` lines.
pub fn write_labels<W: Write>(labels: &[String], mut w: W) -> io::Result<()> {
    for (i, l) in labels.iter().enumerate() {
        writeln!(w, "{i}\t{l}")?;
    }
    Ok(())
}

pub fn read_labels<R: BufRead>(r: R) -> io::Result<Vec<String>> {
    let mut labels = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let (id, label) = line
            .split_once('\t')
            .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidData, format!("line {}: missing tab", i + 1)))?;
        if id.parse::<usize>().ok() != Some(labels.len()) {
            return Err(io::Error::new(io::ErrorKind::InvalidData, format!("line {}: id {id} out of sequence", i + 1)));
        }
        labels.push(label.to_string());
    }
    Ok(labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kgstore::read_quads;

    #[test]
    fn literals_become_nodes_and_whitelist_applies() {
        let text = "author:Q1\thasBirthSituation\tbirth:Q1\tWD\n\
                    birth:Q1\thasStatus\t\"Western\"\tWD\n\
                    author:Q1\tgender\t\"female\"\tWD\n\
                    work:OL:W1\tattributedTo\tauthor:Q1\tOL\n";
        let g = read_quads(text.as_bytes()).unwrap();
        let (data, map) = training_set(&g, None);
        assert_eq!(data.triples.len(), 4);
        assert_eq!(map.relations.len(), 4);
        assert!(map.entity_id("\"Western\"").is_some());

        let (data, map) = training_set(&g, Some(&[Relation::AttributedTo]));
        assert_eq!(data.triples.len(), 1);
        assert_eq!(map.entities, ["author:Q1", "work:OL:W1"]);
        assert_eq!(data.triples[0], (1, 0, 0));
    }

    #[test]
    fn labels_round_trip() {
        let labels = vec!["author:Q1".to_string(), "\"x y\"".to_string()];
        let mut buf = Vec::new();
        write_labels(&labels, &mut buf).unwrap();
        assert_eq!(read_labels(buf.as_slice()).unwrap(), labels);
        assert!(read_labels("1\ta\n".as_bytes()).is_err());
    }
}
