//! Taxonomies over covariate indices.
//!
//! A taxonomy is an ordered list of `T + 1` taxon levels. Each level is a
//! partition of the covariate indices into taxa and the last level consists of
//! singletons. Levels need not be nested: overlapping classifications are
//! allowed, and lineages are formed by raw intersection of one taxon per
//! grouping level.
//!
//! Indices are 0-based in this module. The tabular format ([`TaxonomyTable`])
//! uses 1-based indices.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::{Error, Result};

const NO_TAXON: usize = usize::MAX;

/// Deterministic taxon identifier: level position and first-appearance order
/// within the level (both 0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TaxonId {
    pub level: usize,
    pub order: usize,
}

impl fmt::Display for TaxonId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L{}T{}", self.level + 1, self.order + 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Taxon {
    pub id: TaxonId,
    pub name: Option<String>,
    /// Sorted covariate indices.
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Level {
    pub name: String,
    pub taxa: Vec<Taxon>,
}

impl Level {
    /// Builds a level from member lists, assigning identifiers in list order.
    pub fn from_sets(level: usize, name: impl Into<String>, sets: Vec<Vec<usize>>) -> Self {
        let taxa = sets
            .into_iter()
            .enumerate()
            .map(|(order, mut members)| {
                members.sort_unstable();
                Taxon {
                    id: TaxonId { level, order },
                    name: None,
                    members,
                }
            })
            .collect();
        Level {
            name: name.into(),
            taxa,
        }
    }
}

/// One taxon per grouping level together with the intersection of their
/// member sets.
#[derive(Debug, Clone, PartialEq)]
pub struct Lineage {
    pub taxa: Vec<TaxonId>,
    pub indices: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    /// An index is claimed by more than one taxon of a level.
    Overlap,
    /// Some indices are not covered by any taxon of a level.
    IncompletePartition,
    /// A taxon references an index outside `0..p`.
    OutOfRange,
    EmptyTaxon,
    /// The final level is not the `p` singletons.
    FinalLevelNotSingletons,
    /// Fewer than one grouping level above the singleton level.
    MissingGroupingLevel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub level: usize,
    pub taxon: Option<TaxonId>,
    pub indices: Vec<usize>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match self.kind {
            ViolationKind::Overlap => "overlap",
            ViolationKind::IncompletePartition => "incomplete partition",
            ViolationKind::OutOfRange => "index out of range",
            ViolationKind::EmptyTaxon => "empty taxon",
            ViolationKind::FinalLevelNotSingletons => "final level is not singletons",
            ViolationKind::MissingGroupingLevel => "no grouping level",
        };
        write!(f, "{what} at level {}", self.level + 1)?;
        if let Some(t) = self.taxon {
            write!(f, " in taxon {t}")?;
        }
        if !self.indices.is_empty() {
            let shown: Vec<String> = self.indices.iter().map(|i| (i + 1).to_string()).collect();
            write!(f, ": indices {}", shown.join(","))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Taxonomy {
    p: usize,
    levels: Vec<Level>,
    /// `membership[level][j]` is the position of the taxon holding `j`.
    membership: Vec<Vec<usize>>,
}

impl Taxonomy {
    /// Wraps levels without checking the partition invariants. Use
    /// [`Taxonomy::validate`] to inspect the result.
    pub fn from_parts_unchecked(p: usize, levels: Vec<Level>) -> Self {
        let membership = levels
            .iter()
            .map(|level| {
                let mut map = vec![NO_TAXON; p];
                for (pos, taxon) in level.taxa.iter().enumerate() {
                    for &j in &taxon.members {
                        if j < p && map[j] == NO_TAXON {
                            map[j] = pos;
                        }
                    }
                }
                map
            })
            .collect();
        Taxonomy {
            p,
            levels,
            membership,
        }
    }

    /// Builds a taxonomy from its grouping levels (each a list of member sets)
    /// and appends the singleton level.
    pub fn from_grouping_levels(p: usize, grouping: Vec<Vec<Vec<usize>>>) -> Result<Self> {
        let t = grouping.len();
        let mut levels: Vec<Level> = grouping
            .into_iter()
            .enumerate()
            .map(|(l, sets)| Level::from_sets(l, format!("level{}", l + 1), sets))
            .collect();
        levels.push(singleton_level(p, t, "unit"));
        Taxonomy::from_parts_unchecked(p, levels).checked()
    }

    /// Returns `self` if it has no violations.
    pub fn checked(self) -> Result<Self> {
        let violations = self.validate();
        match violations.first() {
            None => Ok(self),
            Some(v) => Err(Error::InvalidTaxonomy(v.to_string())),
        }
    }

    /// Number of covariates.
    pub fn p(&self) -> usize {
        self.p
    }

    /// Number of grouping levels `T` (the singleton level excluded).
    pub fn depth(&self) -> usize {
        self.levels.len().saturating_sub(1)
    }

    /// All `T + 1` levels, singleton level last.
    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn grouping_levels(&self) -> &[Level] {
        &self.levels[..self.depth()]
    }

    /// Position within `level` of the taxon containing covariate `j`.
    #[inline]
    pub fn taxon_of(&self, level: usize, j: usize) -> usize {
        self.membership[level][j]
    }

    pub fn level_membership(&self, level: usize) -> &[usize] {
        &self.membership[level]
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.levels.len() < 2 {
            out.push(Violation {
                kind: ViolationKind::MissingGroupingLevel,
                level: 0,
                taxon: None,
                indices: Vec::new(),
            });
        }
        for (l, level) in self.levels.iter().enumerate() {
            let mut seen = vec![false; self.p];
            for taxon in &level.taxa {
                if taxon.members.is_empty() {
                    out.push(Violation {
                        kind: ViolationKind::EmptyTaxon,
                        level: l,
                        taxon: Some(taxon.id),
                        indices: Vec::new(),
                    });
                }
                let mut out_of_range = Vec::new();
                let mut repeated = Vec::new();
                for &j in &taxon.members {
                    if j >= self.p {
                        out_of_range.push(j);
                    } else if seen[j] {
                        repeated.push(j);
                    } else {
                        seen[j] = true;
                    }
                }
                if !out_of_range.is_empty() {
                    out.push(Violation {
                        kind: ViolationKind::OutOfRange,
                        level: l,
                        taxon: Some(taxon.id),
                        indices: out_of_range,
                    });
                }
                if !repeated.is_empty() {
                    out.push(Violation {
                        kind: ViolationKind::Overlap,
                        level: l,
                        taxon: Some(taxon.id),
                        indices: repeated,
                    });
                }
            }
            let missing: Vec<usize> = (0..self.p).filter(|&j| !seen[j]).collect();
            if !missing.is_empty() {
                out.push(Violation {
                    kind: ViolationKind::IncompletePartition,
                    level: l,
                    taxon: None,
                    indices: missing,
                });
            }
        }
        if let Some(last) = self.levels.last() {
            let singletons = last.taxa.len() == self.p && last.taxa.iter().all(|t| t.members.len() == 1);
            if !singletons {
                out.push(Violation {
                    kind: ViolationKind::FinalLevelNotSingletons,
                    level: self.levels.len() - 1,
                    taxon: None,
                    indices: Vec::new(),
                });
            }
        }
        out
    }

    /// Nonempty intersections of one taxon per grouping level, ordered
    /// lexicographically by taxon identifiers.
    pub fn lineages(&self) -> Vec<Lineage> {
        let t = self.depth();
        let mut groups: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
        for j in 0..self.p {
            let key: Vec<usize> = (0..t).map(|l| self.membership[l][j]).collect();
            groups.entry(key).or_default().push(j);
        }
        groups
            .into_iter()
            .map(|(key, indices)| Lineage {
                taxa: key
                    .iter()
                    .enumerate()
                    .map(|(l, &pos)| self.levels[l].taxa[pos].id)
                    .collect(),
                indices,
            })
            .collect()
    }

    /// Lineage position of every covariate, consistent with [`Taxonomy::lineages`].
    pub fn lineage_index(&self) -> Vec<usize> {
        let mut out = vec![0; self.p];
        for (k, lineage) in self.lineages().iter().enumerate() {
            for &j in &lineage.indices {
                out[j] = k;
            }
        }
        out
    }

    /// Adds a grouping level identical to the singleton level (placed just
    /// above it).
    pub fn augment_with_singleton_level(&self) -> Taxonomy {
        let t = self.depth();
        let mut levels: Vec<Level> = self.levels[..t].to_vec();
        let mut extra = singleton_level(self.p, t, "unit-copy");
        if let Some(last) = self.levels.last() {
            for (dst, src) in extra.taxa.iter_mut().zip(&last.taxa) {
                dst.name = src.name.clone();
            }
        }
        levels.push(extra);
        let mut last = self.levels[t].clone();
        relabel(&mut last, t + 1);
        levels.push(last);
        Taxonomy::from_parts_unchecked(self.p, levels)
    }

    /// Removes grouping level `level`; at least one grouping level must remain.
    pub fn without_grouping_level(&self, level: usize) -> Result<Taxonomy> {
        let t = self.depth();
        if level >= t || t < 2 {
            return Err(Error::arg(format!(
                "cannot drop grouping level {} of a depth-{t} taxonomy",
                level + 1
            )));
        }
        let mut levels: Vec<Level> = Vec::with_capacity(t);
        for (l, lev) in self.levels.iter().enumerate() {
            if l == level {
                continue;
            }
            let mut lev = lev.clone();
            relabel(&mut lev, levels.len());
            levels.push(lev);
        }
        Ok(Taxonomy::from_parts_unchecked(self.p, levels))
    }

    /// Serializes to the tabular form. Display names that collide within a
    /// level are suffixed so that parsing the table back yields the same
    /// partitions.
    pub fn to_table(&self) -> TaxonomyTable {
        let t = self.depth();
        let labels: Vec<Vec<String>> = self.levels[..t]
            .iter()
            .map(|level| {
                let mut count: BTreeMap<&str, usize> = BTreeMap::new();
                for taxon in &level.taxa {
                    if let Some(n) = &taxon.name {
                        *count.entry(n.as_str()).or_default() += 1;
                    }
                }
                level
                    .taxa
                    .iter()
                    .map(|taxon| match &taxon.name {
                        Some(n) if count[n.as_str()] == 1 && !n.is_empty() => n.clone(),
                        Some(n) if !n.is_empty() => format!("{n}~{}", taxon.id.order + 1),
                        _ => taxon.id.to_string(),
                    })
                    .collect()
            })
            .collect();
        let units = &self.levels[t];
        let rows = (0..self.p)
            .map(|j| TableRow {
                index: j + 1,
                labels: (0..t).map(|l| labels[l][self.membership[l][j]].clone()).collect(),
                unit: units.taxa[self.membership[t][j]]
                    .name
                    .clone()
                    .unwrap_or_else(|| format!("u{}", j + 1)),
            })
            .collect();
        TaxonomyTable {
            level_names: self.levels[..t].iter().map(|l| l.name.clone()).collect(),
            unit_name: units.name.clone(),
            rows,
        }
    }
}

fn relabel(level: &mut Level, new_level: usize) {
    for taxon in &mut level.taxa {
        taxon.id.level = new_level;
    }
}

fn singleton_level(p: usize, level: usize, name: &str) -> Level {
    Level::from_sets(level, name, (0..p).map(|j| vec![j]).collect())
}

/// Every level (grouping levels and the final one) consists of the `p`
/// singletons.
pub fn singleton_taxonomy(p: usize, depth: usize) -> Result<Taxonomy> {
    if p == 0 || depth == 0 {
        return Err(Error::arg("singleton taxonomy needs p >= 1 and T >= 1"));
    }
    let mut levels: Vec<Level> = (0..depth)
        .map(|l| singleton_level(p, l, &format!("level{}", l + 1)))
        .collect();
    levels.push(singleton_level(p, depth, "unit"));
    Ok(Taxonomy::from_parts_unchecked(p, levels))
}

const RANK_NAMES: [&str; 6] = ["phylum", "class", "order", "family", "genus", "species"];

/// Balanced nested taxonomy: grouping level `k` (`0..depth`) has
/// `branching^k` taxa of `branching^(depth - k)` consecutive indices each, and
/// `p = branching^depth`.
pub fn balanced_taxonomy(branching: usize, depth: usize) -> Result<Taxonomy> {
    if branching < 2 || depth < 1 {
        return Err(Error::arg("balanced taxonomy needs branching >= 2 and depth >= 1"));
    }
    let p = u32::try_from(depth)
        .ok()
        .and_then(|d| branching.checked_pow(d))
        .filter(|&p| p <= 1 << 28)
        .ok_or_else(|| Error::arg("balanced taxonomy too large"))?;
    let mut levels = Vec::with_capacity(depth + 1);
    for k in 0..depth {
        let size = p / branching.pow(k as u32);
        let sets = (0..p / size).map(|i| (i * size..(i + 1) * size).collect()).collect();
        let name = RANK_NAMES.get(k).map_or_else(|| format!("rank{k}"), |s| String::from(*s));
        levels.push(Level::from_sets(k, name, sets));
    }
    levels.push(singleton_level(p, depth, "unit"));
    Ok(Taxonomy::from_parts_unchecked(p, levels))
}

/// Tabular taxonomy: one row per covariate with one label per named level and
/// a terminal unit label.
#[derive(Debug, Clone, PartialEq)]
pub struct TaxonomyTable {
    pub level_names: Vec<String>,
    pub unit_name: String,
    pub rows: Vec<TableRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    /// 1-based covariate index.
    pub index: usize,
    pub labels: Vec<String>,
    pub unit: String,
}

fn is_unclassified(label: &str) -> bool {
    label.trim().eq_ignore_ascii_case("unclassified")
}

/// Builds a taxonomy from a table.
///
/// Each label column becomes a grouping level whose taxa are the distinct
/// labels; the unit column becomes the singleton level. An `unclassified`
/// label is scoped to the taxon of the preceding column, so two such labels
/// under different parents are different taxa. Taxa are numbered in order of
/// first appearance when scanning covariates by increasing index.
pub fn parse_taxonomy(table: &TaxonomyTable) -> Result<Taxonomy> {
    let p = table.rows.len();
    if p == 0 {
        return Err(Error::TableFormat("empty table".into()));
    }
    let t = table.level_names.len();
    if t == 0 {
        return Err(Error::TableFormat("no taxon level columns".into()));
    }
    let mut by_index: Vec<Option<&TableRow>> = vec![None; p];
    for (r, row) in table.rows.iter().enumerate() {
        if row.labels.len() != t {
            return Err(Error::TableFormat(format!(
                "row {} has {} labels, expected {t}",
                r + 1,
                row.labels.len()
            )));
        }
        if row.index == 0 || row.index > p {
            return Err(Error::TableFormat(format!(
                "covariate index {} outside 1..{p}",
                row.index
            )));
        }
        let slot = &mut by_index[row.index - 1];
        if slot.is_some() {
            return Err(Error::TableFormat(format!("duplicate covariate index {}", row.index)));
        }
        if let Some(l) = row.labels.iter().position(|s| s.trim().is_empty()) {
            return Err(Error::TableFormat(format!(
                "missing label in column {} for index {}",
                l + 1,
                row.index
            )));
        }
        *slot = Some(row);
    }
    let rows: Vec<&TableRow> = by_index.into_iter().map(|r| r.expect("all indices seen")).collect();

    let mut levels: Vec<Level> = Vec::with_capacity(t + 1);
    let mut parent_of: Vec<usize> = vec![0; p];
    for l in 0..t {
        let mut keys: BTreeMap<(String, Option<usize>), usize> = BTreeMap::new();
        let mut taxa: Vec<Taxon> = Vec::new();
        let mut current = vec![0; p];
        for (j, row) in rows.iter().enumerate() {
            let label = row.labels[l].trim();
            let scope = (l > 0 && is_unclassified(label)).then(|| parent_of[j]);
            let pos = *keys.entry((String::from(label), scope)).or_insert_with(|| {
                taxa.push(Taxon {
                    id: TaxonId {
                        level: l,
                        order: taxa.len(),
                    },
                    name: Some(String::from(label)),
                    members: Vec::new(),
                });
                taxa.len() - 1
            });
            taxa[pos].members.push(j);
            current[j] = pos;
        }
        parent_of = current;
        levels.push(Level {
            name: table.level_names[l].clone(),
            taxa,
        });
    }
    let mut units = singleton_level(p, t, &table.unit_name);
    for (taxon, row) in units.taxa.iter_mut().zip(&rows) {
        taxon.name = Some(row.unit.clone());
    }
    levels.push(units);
    Taxonomy::from_parts_unchecked(p, levels).checked()
}
