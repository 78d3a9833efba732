//! Brute-force reference for matching and rewriting, shared by test targets.

use std::collections::{BTreeMap, BTreeSet};

use parthenos::graph::{
    apply_spo, find_matches, kb_diff, ElementRef, Fact, KnowledgeBase, PatternGraph, Production, Term, Value,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const VERTEX_LABELS: [&str; 2] = ["a", "b"];
const EDGE_LABELS: [&str; 2] = ["x", "y"];

pub fn random_kb(rng: &mut StdRng) -> KnowledgeBase {
    let n = rng.gen_range(0..=8);
    let mut facts = Vec::new();
    for i in 0..n {
        facts.push(Fact::vertex(format!("v{i}"), VERTEX_LABELS[rng.gen_range(0..2)]));
        if rng.gen_bool(0.5) {
            facts.push(Fact::property(format!("v{i}"), "k", Value::Int(rng.gen_range(0..3))));
        }
    }
    if n > 0 {
        for j in 0..rng.gen_range(0..=12) {
            let from = rng.gen_range(0..n);
            let to = rng.gen_range(0..n);
            let id = format!("e{j}");
            facts.push(Fact::edge(&id, format!("v{from}"), format!("v{to}"), EDGE_LABELS[rng.gen_range(0..2)]));
            if rng.gen_bool(0.3) {
                facts.push(Fact::property(&id, "w", Value::Bool(rng.gen_bool(0.5))));
            }
        }
    }
    KnowledgeBase::from_facts(facts).unwrap()
}

struct RandomPattern {
    graph: PatternGraph,
    bindings: BTreeMap<String, Value>,
}

fn random_pattern(rng: &mut StdRng, kb: &KnowledgeBase) -> RandomPattern {
    let n = rng.gen_range(1..=3);
    let mut graph = PatternGraph::new();
    let mut bindings = BTreeMap::new();
    let hosts: Vec<String> = kb.vertices().map(|(id, _)| id.to_string()).collect();
    for i in 0..n {
        let var = format!("v{i}");
        // Occasionally anchor a vertex through a pre-bound variable or a constant.
        let term = match rng.gen_range(0..6) {
            0 if !hosts.is_empty() => Term::id(hosts[rng.gen_range(0..hosts.len())].clone()),
            1 if !hosts.is_empty() => {
                bindings.insert(var.clone(), Value::atom(hosts[rng.gen_range(0..hosts.len())].clone()));
                Term::var(&var)
            }
            _ => Term::var(&var),
        };
        graph = graph.vertex(term, VERTEX_LABELS[rng.gen_range(0..2)]);
    }
    let vterms: Vec<Term> = graph.vertices.iter().map(|v| v.id.clone()).collect();
    for j in 0..rng.gen_range(0..=3) {
        let from = vterms[rng.gen_range(0..n)].clone();
        let to = vterms[rng.gen_range(0..n)].clone();
        graph = graph.edge(Term::var(format!("p{j}")), from, to, EDGE_LABELS[rng.gen_range(0..2)]);
    }
    if rng.gen_bool(0.4) {
        let owner = vterms[rng.gen_range(0..n)].clone();
        let value = if rng.gen_bool(0.5) {
            Term::Const(Value::Int(rng.gen_range(0..3)))
        } else {
            Term::var("kval")
        };
        graph = graph.property(owner, "k", value);
    }
    RandomPattern { graph, bindings }
}

/// Every injective, label- and endpoint-preserving assignment, by exhaustive enumeration.
fn brute_force(p: &RandomPattern, kb: &KnowledgeBase) -> BTreeSet<(Vec<String>, Vec<String>)> {
    let hosts: Vec<(String, String)> = kb.vertices().map(|(i, l)| (i.to_string(), l.to_string())).collect();
    let host_edges: Vec<(String, String, String, String)> = kb
        .edges()
        .map(|(id, e)| (id.to_string(), e.from.clone(), e.to.clone(), e.label.clone()))
        .collect();
    let nv = p.graph.vertices.len();
    let ne = p.graph.edges.len();
    let mut out = BTreeSet::new();

    let fits = |term: &Term, host: &str, bindings: &BTreeMap<String, Value>| match term {
        Term::Const(Value::Atom(c)) => c == host,
        Term::Const(_) => false,
        Term::Var(v) => bindings.get(v).is_none_or(|b| *b == Value::atom(host)),
    };

    // Odometer over vertex assignments.
    let mut vidx = vec![0usize; nv];
    if hosts.is_empty() {
        return out;
    }
    loop {
        let assigned: Vec<&(String, String)> = vidx.iter().map(|&i| &hosts[i]).collect();
        let distinct: BTreeSet<&String> = assigned.iter().map(|(id, _)| id).collect();
        let ok = distinct.len() == nv
            && p.graph
                .vertices
                .iter()
                .zip(&assigned)
                .all(|(pv, (id, label))| *label == pv.label && fits(&pv.id, id, &p.bindings));
        if ok {
            let vimg: Vec<String> = assigned.iter().map(|(id, _)| id.clone()).collect();
            let index_of = |t: &Term| p.graph.vertices.iter().position(|v| v.id == *t).unwrap();
            // Odometer over edge assignments.
            let mut eidx = vec![0usize; ne];
            loop {
                if ne > 0 && host_edges.is_empty() {
                    break;
                }
                let eimg: Vec<&(String, String, String, String)> = eidx.iter().map(|&i| &host_edges[i]).collect();
                let distinct: BTreeSet<&String> = eimg.iter().map(|e| &e.0).collect();
                let edges_ok = distinct.len() == ne
                    && p.graph.edges.iter().zip(&eimg).all(|(pe, (_, from, to, label))| {
                        *label == pe.label && vimg[index_of(&pe.from)] == *from && vimg[index_of(&pe.to)] == *to
                    });
                let props_ok = edges_ok
                    && p.graph.properties.iter().all(|pp| {
                        let owner = &vimg[index_of(&pp.owner)];
                        match (kb.property(owner, &pp.key), &pp.value) {
                            (Some(v), Term::Const(c)) => v == c,
                            (Some(v), Term::Var(name)) => p.bindings.get(name).is_none_or(|b| b == v),
                            (None, _) => false,
                        }
                    });
                if props_ok {
                    out.insert((vimg.clone(), eimg.iter().map(|e| e.0.clone()).collect()));
                }
                if !advance(&mut eidx, host_edges.len()) {
                    break;
                }
            }
        }
        if !advance(&mut vidx, hosts.len()) {
            break;
        }
    }
    out
}

fn advance(idx: &mut [usize], base: usize) -> bool {
    for d in idx.iter_mut() {
        *d += 1;
        if *d < base {
            return true;
        }
        *d = 0;
    }
    false
}

/// A production over `lhs` that keeps a random subset of elements and adds one
/// vertex plus, when something is kept, an edge to it.
fn random_production(rng: &mut StdRng, lhs: &PatternGraph) -> (Production, Vec<bool>, Vec<bool>) {
    let keep_v: Vec<bool> = lhs.vertices.iter().map(|_| rng.gen_bool(0.6)).collect();
    let mut rhs = PatternGraph::new();
    let mut mapping = Vec::new();
    for (i, v) in lhs.vertices.iter().enumerate() {
        if keep_v[i] {
            mapping.push((ElementRef::Vertex(i), ElementRef::Vertex(rhs.vertices.len())));
            rhs = rhs.vertex(v.id.clone(), &v.label);
        }
    }
    let kept = |t: &Term| lhs.vertex_index(t).is_some_and(|i| keep_v[i]);
    let mut keep_e = Vec::new();
    for (i, e) in lhs.edges.iter().enumerate() {
        let k = kept(&e.from) && kept(&e.to) && rng.gen_bool(0.7);
        keep_e.push(k);
        if k {
            mapping.push((ElementRef::Edge(i), ElementRef::Edge(rhs.edges.len())));
            rhs = rhs.edge(e.id.clone(), e.from.clone(), e.to.clone(), &e.label);
        }
    }
    for (i, pp) in lhs.properties.iter().enumerate() {
        if kept(&pp.owner) {
            mapping.push((ElementRef::Property(i), ElementRef::Property(rhs.properties.len())));
            rhs = rhs.property(pp.owner.clone(), &pp.key, pp.value.clone());
        }
    }
    rhs = rhs.vertex(Term::var("fresh"), "a");
    if let Some(anchor) = rhs.vertices.first().map(|v| v.id.clone()).filter(|t| *t != Term::var("fresh")) {
        rhs = rhs.edge(Term::var("fresh_edge"), anchor, Term::var("fresh"), "x");
    }
    let params = vec!["fresh".to_string(), "fresh_edge".to_string()];
    let prod = Production::new("random", lhs.clone(), rhs, mapping, params).unwrap();
    (prod, keep_v, keep_e)
}

/// Expected rewrite result, rebuilt from fact sets.
fn expected_rewrite(
    kb: &KnowledgeBase,
    vimg: &[String],
    eimg: &[String],
    keep_v: &[bool],
    keep_e: &[bool],
    prod: &Production,
) -> BTreeSet<Fact> {
    let deleted_v: BTreeSet<&String> = vimg.iter().zip(keep_v).filter(|(_, k)| !**k).map(|(v, _)| v).collect();
    let mut deleted_e: BTreeSet<String> = eimg.iter().zip(keep_e).filter(|(_, k)| !**k).map(|(e, _)| e.clone()).collect();
    for (id, e) in kb.edges() {
        if deleted_v.contains(&e.from) || deleted_v.contains(&e.to) {
            deleted_e.insert(id.to_string());
        }
    }
    let mut facts: BTreeSet<Fact> = kb
        .facts()
        .into_iter()
        .filter(|f| match f {
            Fact::Vertex { id, .. } => !deleted_v.contains(id),
            Fact::Edge { id, .. } => !deleted_e.contains(id),
            Fact::Property { owner, .. } => !deleted_v.contains(owner) && !deleted_e.contains(owner),
        })
        .collect();
    // Deleted lhs properties whose owners survive.
    for pp in &prod.lhs.properties {
        let i = prod.lhs.vertex_index(&pp.owner).unwrap();
        if keep_v[i] {
            continue;
        }
        facts.retain(|f| !matches!(f, Fact::Property { owner, key, .. } if *owner == vimg[i] && *key == pp.key));
    }
    facts.insert(Fact::vertex("new:0", "a"));
    if let Some(first) = vimg.iter().zip(keep_v).find(|(_, k)| **k).map(|(v, _)| v) {
        facts.insert(Fact::edge("new:e", first, "new:0", "x"));
    }
    facts
}

/// Runs `total` seeded random cases and panics on the first disagreement.
/// Returns how many cases had at least one match and how many were rewritten.
pub fn check_random_cases(seed: u64, total: usize) -> (usize, usize) {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut cases = 0;
    let mut rewrites = 0;
    let mut nonempty = 0;
    while cases < total {
        let kb = random_kb(&mut rng);
        let p = random_pattern(&mut rng, &kb);
        let got: Vec<_> = find_matches(&p.graph, &p.bindings, &kb);
        let got_set: BTreeSet<_> = got.iter().map(|m| (m.vertices.clone(), m.edges.clone())).collect();
        assert_eq!(got.len(), got_set.len(), "duplicate matches");
        let want = brute_force(&p, &kb);
        assert_eq!(got_set, want, "pattern {:?} on {:?}", p.graph, kb);
        let mut sorted = got.clone();
        sorted.sort();
        assert_eq!(got, sorted, "matches are ordered");
        if !got.is_empty() {
            nonempty += 1;
        }
        for m in &got {
            m.verify(&p.graph, &kb).unwrap();
        }

        if let Some(m) = got.first() {
            let (prod, keep_v, keep_e) = random_production(&mut rng, &p.graph);
            let mut m = m.clone();
            m.bindings.insert("fresh".into(), Value::atom("new:0"));
            m.bindings.insert("fresh_edge".into(), Value::atom("new:e"));
            let (after, delta) = apply_spo(&prod, &m, &kb).unwrap();
            after.validate().unwrap();
            assert_eq!(delta, kb_diff(&kb, &after));
            let before = kb.facts();
            assert!(delta.removed.is_subset(&before));
            assert!(delta.added.is_disjoint(&before));
            assert_eq!(
                after.facts(),
                expected_rewrite(&kb, &m.vertices, &m.edges, &keep_v, &keep_e, &prod)
            );
            rewrites += 1;
        }
        cases += 1;
    }
    (nonempty, rewrites)
}
