#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use philasso::formats::{write_design, write_taxonomy_table, write_vector};
use philasso_core::taxonomy::balanced_taxonomy;
use philasso_core::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Fixture {
    pub design: PathBuf,
    pub response: PathBuf,
    pub taxonomy: PathBuf,
    pub p: usize,
}

impl Fixture {
    pub fn data_args(&self, family: &str) -> Vec<String> {
        vec![
            "--design".into(),
            self.design.display().to_string(),
            "--response".into(),
            self.response.display().to_string(),
            "--taxonomy".into(),
            self.taxonomy.display().to_string(),
            "--family".into(),
            family.into(),
        ]
    }
}

/// Writes a seeded dataset over a balanced binary taxonomy with `depth`
/// grouping levels; the first lineage block carries the signal.
pub fn write_fixture(dir: &Path, n: usize, depth: usize, logistic: bool, seed: u64) -> Fixture {
    let tax = balanced_taxonomy(2, depth).unwrap();
    let p = tax.p();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<f64> = (0..n * p).map(|_| rng.random_range(-1.5..1.5)).collect();
    let x = Matrix::from_col_major(n, p, x).unwrap();
    let beta: Vec<f64> = (0..p).map(|j| if j < 2 { 1.5 } else { 0.0 }).collect();
    let eta = x.mul_vec(&beta);
    let y: Vec<f64> = eta
        .iter()
        .enumerate()
        .map(|(i, e)| {
            if logistic {
                let mut v = f64::from(u8::from(rng.random_bool(1.0 / (1.0 + (-e).exp()))));
                if i < 2 {
                    v = i as f64;
                }
                v
            } else {
                e + rng.random_range(-1.0..1.0)
            }
        })
        .collect();
    let ids: Vec<String> = (1..=p).map(|j| format!("otu{j}")).collect();
    let f = Fixture {
        design: dir.join("design.tsv"),
        response: dir.join("response.txt"),
        taxonomy: dir.join("taxonomy.tsv"),
        p,
    };
    std::fs::write(&f.design, write_design(&ids, &x)).unwrap();
    std::fs::write(&f.response, write_vector(&y)).unwrap();
    std::fs::write(&f.taxonomy, write_taxonomy_table(&tax.to_table())).unwrap();
    f
}

pub fn philasso(args: &[String]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_philasso"))
        .args(args)
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .output()
        .unwrap()
}

pub fn args(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}
