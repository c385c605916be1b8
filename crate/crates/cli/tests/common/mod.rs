#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use invlrr::Matrix;
use invlrr_cli::matfile::write_matrix;

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl From<Output> for Run {
    fn from(o: Output) -> Self {
        Self {
            code: o.status.code().unwrap_or(-1),
            stdout: String::from_utf8_lossy(&o.stdout).into_owned(),
            stderr: String::from_utf8_lossy(&o.stderr).into_owned(),
        }
    }
}

pub fn invlrr(args: &[&str]) -> Run {
    Command::new(env!("CARGO_BIN_EXE_invlrr")).args(args).output().expect("binary runs").into()
}

/// Runs `invlrr <cmd> --config <cfg> --out <out> [extra…]`.
pub fn run_in(cmd: &str, cfg: &Path, out: &Path, extra: &[&str]) -> Run {
    let mut args = vec![cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    invlrr(&args)
}

pub fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

/// Permutation matrix sending coordinate `i` to `perm[i]`, written as a matrix file.
pub fn write_permutation(dir: &Path, name: &str, perm: &[usize]) -> PathBuf {
    let d = perm.len();
    let m = Matrix::from_fn(d, d, |i, j| if perm[j] == i { 1.0 } else { 0.0 });
    let path = dir.join(name);
    write_matrix(&path, &m).unwrap();
    path
}

pub fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(str::to_string).collect::<Vec<_>>();
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    for row in &rows {
        assert_eq!(row.len(), header.len(), "ragged row {row:?}");
    }
    (header, rows)
}

pub fn column(rows: &[Vec<String>], i: usize) -> Vec<f64> {
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

/// Value of `key=…` in a summary line.
pub fn field(summary: &str, key: &str) -> String {
    summary
        .split_whitespace()
        .find_map(|tok| tok.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no `{key}` in `{summary}`"))
        .to_string()
}

pub const STANDARD: &str = "group = c4_image:4\ndL = 4\nn = 64\nnoise_sigma = 0.1\ntarget_rank = 3\nseed = 1\n\
                            r = 3\nhidden = 3\nepochs = 5000\nlearning_rate = 0.001\n";
