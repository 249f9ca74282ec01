//! Hypernym taxonomy with information content and Lin similarity.
//!
//! Synsets form a DAG where each synset lists its hypernyms (parents). The
//! information content of a synset is `-log p(s)` where `p(s)` is estimated
//! from sense-tagged frequency counts propagated up the hierarchy.
//!
//! File formats, all UTF-8 TSV, `#` starts a comment line:
//!
//! * taxonomy: `synset_id<TAB>parent1,parent2,...` (empty field for roots)
//! * lexicon:  `token<TAB>synset1,synset2,...`
//! * IC:       `synset_id<TAB>ic` or raw counts `synset_id<TAB>count`

use std::collections::{HashMap, HashSet, VecDeque};
use std::io::BufRead;

use crate::error::{Error, Result};

/// Which kind of third file accompanies the taxonomy.
pub enum IcSource<R> {
    /// Precomputed information content per synset.
    Values(R),
    /// Raw sense frequencies; IC is derived with [`compute_ic`].
    Counts(R),
    /// No IC available; every synset gets 0.
    Absent,
}

/// Raw synset frequencies from a sense-tagged corpus.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IcCounts {
    pub counts: HashMap<String, f64>,
}

impl IcCounts {
    /// Sum of all counts, accumulated in synset-id order.
    pub fn total(&self) -> f64 {
        let mut entries: Vec<(&String, &f64)> = self.counts.iter().collect();
        entries.sort_by(|a, b| a.0.cmp(b.0));
        entries.into_iter().map(|(_, c)| c).sum()
    }
}

#[derive(Debug, Clone)]
pub struct TaxonomyGraph {
    ids: Vec<String>,
    id_index: HashMap<String, usize>,
    parents: Vec<Vec<usize>>,
    lemma_index: HashMap<String, Vec<usize>>,
    ic: Vec<f64>,
}

fn tsv_lines<R: BufRead>(
    reader: R,
    what: &str,
) -> impl Iterator<Item = Result<(usize, String, String)>> {
    let what = what.to_string();
    reader.lines().enumerate().filter_map(move |(i, line)| {
        let line_no = i + 1;
        let line = match line {
            Ok(l) => l,
            Err(e) if e.kind() == std::io::ErrorKind::InvalidData => {
                return Some(Err(Error::parse(line_no, format!("{what}: invalid UTF-8"))))
            }
            Err(e) => return Some(Err(Error::Io(e))),
        };
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            return None;
        }
        let mut fields = line.splitn(2, '\t');
        let key = fields.next().unwrap_or_default().trim().to_string();
        let value = fields.next().unwrap_or_default().trim().to_string();
        if key.is_empty() {
            return Some(Err(Error::parse(line_no, format!("{what}: empty key"))));
        }
        if value.contains('\t') {
            return Some(Err(Error::parse(
                line_no,
                format!("{what}: too many fields"),
            )));
        }
        Some(Ok((line_no, key, value)))
    })
}

fn id_list(field: &str) -> impl Iterator<Item = &str> {
    field.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn parse_number(line: usize, what: &str, field: &str) -> Result<f64> {
    let v: f64 = field
        .parse()
        .map_err(|_| Error::parse(line, format!("{what}: not a number: {field:?}")))?;
    if !(v.is_finite() && v >= 0.0) {
        return Err(Error::parse(
            line,
            format!("{what}: value must be finite and >= 0"),
        ));
    }
    Ok(v)
}

/// Reads a raw counts file (`synset_id<TAB>count`).
pub fn read_ic_counts<R: BufRead>(reader: R) -> Result<IcCounts> {
    let mut counts = HashMap::new();
    for row in tsv_lines(reader, "counts") {
        let (line, id, value) = row?;
        *counts.entry(id).or_insert(0.0) += parse_number(line, "counts", &value)?;
    }
    Ok(IcCounts { counts })
}

/// Loads and validates a taxonomy, its lexicon and information content.
pub fn load_taxonomy<T: BufRead, L: BufRead, I: BufRead>(
    taxonomy: T,
    lexicon: L,
    ic: IcSource<I>,
) -> Result<TaxonomyGraph> {
    let mut ids = Vec::new();
    let mut id_index = HashMap::new();
    let mut raw_parents: Vec<(usize, Vec<String>)> = Vec::new();
    for row in tsv_lines(taxonomy, "taxonomy") {
        let (line, id, parents) = row?;
        if id_index.insert(id.clone(), ids.len()).is_some() {
            return Err(Error::Load(format!(
                "line {line}: synset {id} declared twice"
            )));
        }
        ids.push(id);
        raw_parents.push((line, id_list(&parents).map(str::to_string).collect()));
    }
    let mut parents = Vec::with_capacity(ids.len());
    for (s, (line, names)) in raw_parents.into_iter().enumerate() {
        let mut resolved = Vec::with_capacity(names.len());
        for name in names {
            let p = *id_index.get(&name).ok_or_else(|| {
                Error::Load(format!("line {line}: {} has unknown parent {name}", ids[s]))
            })?;
            if !resolved.contains(&p) {
                resolved.push(p);
            }
        }
        parents.push(resolved);
    }

    let mut lemma_index: HashMap<String, Vec<usize>> = HashMap::new();
    for row in tsv_lines(lexicon, "lexicon") {
        let (line, token, synsets) = row?;
        let entry = lemma_index.entry(token.to_lowercase()).or_default();
        for name in id_list(&synsets) {
            let s = *id_index.get(name).ok_or_else(|| {
                Error::Load(format!(
                    "lexicon line {line}: {token} maps to unknown synset {name}"
                ))
            })?;
            if !entry.contains(&s) {
                entry.push(s);
            }
        }
    }
    lemma_index.retain(|_, v| !v.is_empty());

    let mut graph = TaxonomyGraph {
        ic: vec![0.0; ids.len()],
        ids,
        id_index,
        parents,
        lemma_index,
    };
    graph.check_acyclic()?;

    match ic {
        IcSource::Values(reader) => {
            let mut seen = vec![false; graph.len()];
            for row in tsv_lines(reader, "ic") {
                let (line, id, value) = row?;
                let s = graph
                    .index_of(&id)
                    .map_err(|_| Error::Load(format!("ic line {line}: unknown synset {id}")))?;
                graph.ic[s] = parse_number(line, "ic", &value)?;
                seen[s] = true;
            }
            let missing = seen.iter().filter(|&&s| !s).count();
            if missing > 0 {
                log::warn!("{missing} synsets have no information content; using 0");
            }
        }
        IcSource::Counts(reader) => {
            let counts = read_ic_counts(reader)?;
            if let Some(unknown) = counts
                .counts
                .keys()
                .find(|id| !graph.id_index.contains_key(*id))
            {
                return Err(Error::Load(format!(
                    "counts reference unknown synset {unknown}"
                )));
            }
            graph.ic = compute_ic(&graph, &counts)?;
        }
        IcSource::Absent => {
            log::warn!("no information content supplied; all similarities will be 0");
        }
    }
    if let Some((child, parent)) = graph.ic_violation() {
        log::warn!(
            "information content increases from {} to its hypernym {}",
            graph.ids[child],
            graph.ids[parent]
        );
    }
    Ok(graph)
}

/// Information content from raw counts with add-one smoothing:
/// `IC(s) = -ln((cum(s) + 1) / (total + |S|))` where `cum(s)` sums the counts
/// of `s` and all of its descendants, each descendant counted once.
pub fn compute_ic(graph: &TaxonomyGraph, counts: &IcCounts) -> Result<Vec<f64>> {
    let total = counts.total();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::InvalidArgument(
            "IC counts must have a positive total".into(),
        ));
    }
    let mut cumulative = vec![0.0; graph.len()];
    // iterate in id order so the float accumulation order is fixed
    let mut own: Vec<(usize, f64)> = counts
        .counts
        .iter()
        .filter(|(_, &c)| c > 0.0)
        .filter_map(|(id, &c)| graph.id_index.get(id).map(|&s| (s, c)))
        .collect();
    own.sort_by_key(|&(s, _)| s);
    for (s, c) in own {
        for a in graph.ancestor_distances(s).into_keys() {
            cumulative[a] += c;
        }
    }
    let denom = total + graph.len() as f64;
    Ok(cumulative
        .iter()
        .map(|&c| -((c + 1.0) / denom).ln())
        .collect())
}

impl TaxonomyGraph {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.id_index.contains_key(id)
    }

    pub fn synset_ids(&self) -> &[String] {
        &self.ids
    }

    pub fn parents(&self, id: &str) -> Result<Vec<&str>> {
        let s = self.index_of(id)?;
        Ok(self.parents[s]
            .iter()
            .map(|&p| self.ids[p].as_str())
            .collect())
    }

    pub fn roots(&self) -> Vec<&str> {
        (0..self.len())
            .filter(|&s| self.parents[s].is_empty())
            .map(|s| self.ids[s].as_str())
            .collect()
    }

    pub fn ic(&self, id: &str) -> Result<f64> {
        Ok(self.ic[self.index_of(id)?])
    }

    /// Replaces the information content, e.g. after [`compute_ic`].
    pub fn set_ic(&mut self, ic: Vec<f64>) -> Result<()> {
        if ic.len() != self.len() || ic.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidArgument(
                "IC vector does not match the taxonomy".into(),
            ));
        }
        self.ic = ic;
        Ok(())
    }

    /// Multiplies every IC value by `factor`.
    pub fn scale_ic(&mut self, factor: f64) {
        self.ic.iter_mut().for_each(|v| *v *= factor);
    }

    /// Synsets a token belongs to. Multi-word tags also match their
    /// underscore-joined lemma (`"hunting dog"` -> `hunting_dog`).
    pub fn synsets_of(&self, token: &str) -> Vec<&str> {
        self.lemma_synsets(token)
            .iter()
            .map(|&s| self.ids[s].as_str())
            .collect()
    }

    fn lemma_synsets(&self, token: &str) -> &[usize] {
        let token = token.trim().to_lowercase();
        if let Some(v) = self.lemma_index.get(&token) {
            return v;
        }
        if token.contains(' ') {
            if let Some(v) = self.lemma_index.get(&token.replace(' ', "_")) {
                return v;
            }
        }
        &[]
    }

    fn index_of(&self, id: &str) -> Result<usize> {
        self.id_index
            .get(id)
            .copied()
            .ok_or_else(|| Error::InvalidArgument(format!("unknown synset {id}")))
    }

    /// Shortest hop count from `s` to each of its ancestors, `s` included at 0.
    fn ancestor_distances(&self, s: usize) -> HashMap<usize, usize> {
        let mut dist = HashMap::from([(s, 0)]);
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            let du = dist[&u];
            for &p in &self.parents[u] {
                if let std::collections::hash_map::Entry::Vacant(e) = dist.entry(p) {
                    e.insert(du + 1);
                    queue.push_back(p);
                }
            }
        }
        dist
    }

    fn check_acyclic(&self) -> Result<()> {
        let n = self.len();
        let mut pending: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut children = vec![Vec::new(); n];
        for (c, ps) in self.parents.iter().enumerate() {
            for &p in ps {
                children[p].push(c);
            }
        }
        let mut queue: VecDeque<usize> = (0..n).filter(|&s| pending[s] == 0).collect();
        let mut done = vec![false; n];
        while let Some(u) = queue.pop_front() {
            done[u] = true;
            for &c in &children[u] {
                pending[c] -= 1;
                if pending[c] == 0 {
                    queue.push_back(c);
                }
            }
        }
        let Some(start) = (0..n).find(|&s| !done[s]) else {
            return Ok(());
        };
        // every unfinished synset still has an unfinished parent, so walking
        // those parents must revisit a node
        let mut visited = HashSet::new();
        let mut u = start;
        loop {
            visited.insert(u);
            let p = *self.parents[u]
                .iter()
                .find(|&&p| !done[p])
                .expect("unfinished parent");
            if visited.contains(&p) {
                return Err(Error::Load(format!(
                    "hypernym cycle through edge {} -> {}",
                    self.ids[u], self.ids[p]
                )));
            }
            u = p;
        }
    }

    fn ic_violation(&self) -> Option<(usize, usize)> {
        (0..self.len()).find_map(|c| {
            self.parents[c]
                .iter()
                .find(|&&p| self.ic[p] > self.ic[c] + 1e-12)
                .map(|&p| (c, p))
        })
    }

    fn lcs_index(&self, s1: usize, s2: usize) -> Option<usize> {
        let a1 = self.ancestor_distances(s1);
        let a2 = self.ancestor_distances(s2);
        a1.iter()
            .filter_map(|(&a, &h1)| a2.get(&a).map(|&h2| (a, h1 + h2)))
            .min_by(|&(a, ha), &(b, hb)| {
                self.ic[b]
                    .total_cmp(&self.ic[a])
                    .then(ha.cmp(&hb))
                    .then_with(|| self.ids[a].cmp(&self.ids[b]))
            })
            .map(|(a, _)| a)
    }

    /// Lowest common subsumer: the common ancestor (a synset is its own
    /// ancestor) with the highest IC; ties go to the shortest combined hop
    /// distance, then to the smaller synset id. `None` when the synsets live
    /// in disconnected trees.
    pub fn lcs(&self, s1: &str, s2: &str) -> Result<Option<&str>> {
        let (a, b) = (self.index_of(s1)?, self.index_of(s2)?);
        Ok(self.lcs_index(a, b).map(|s| self.ids[s].as_str()))
    }

    fn lin_index(&self, s1: usize, s2: usize) -> f64 {
        let denom = self.ic[s1] + self.ic[s2];
        if denom.is_nan() || denom <= 0.0 {
            return 0.0;
        }
        match self.lcs_index(s1, s2) {
            Some(l) => (2.0 * self.ic[l] / denom).clamp(0.0, 1.0),
            None => 0.0,
        }
    }

    /// `2 IC(lcs) / (IC(s1) + IC(s2))`, or 0 without a common subsumer.
    pub fn lin_similarity(&self, s1: &str, s2: &str) -> Result<f64> {
        Ok(self.lin_index(self.index_of(s1)?, self.index_of(s2)?))
    }

    /// Max Lin similarity over all sense pairs; 0 for tokens not in the lexicon.
    pub fn word_similarity(&self, w1: &str, w2: &str) -> f64 {
        let (a, b) = (self.lemma_synsets(w1), self.lemma_synsets(w2));
        let mut best: f64 = 0.0;
        for &s1 in a {
            for &s2 in b {
                best = best.max(self.lin_index(s1, s2));
            }
        }
        best
    }

    /// Max Lin similarity between any sense of `word` and a fixed synset.
    pub fn word_synset_similarity(&self, word: &str, synset: &str) -> Result<f64> {
        let target = self.index_of(synset)?;
        Ok(self
            .lemma_synsets(word)
            .iter()
            .map(|&s| self.lin_index(s, target))
            .fold(0.0, f64::max))
    }
}
