#![allow(dead_code)]

use std::path::PathBuf;

use vartrace_core::minilang::{parse, Program};

pub fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn corpus_dir() -> PathBuf {
    root().join("corpus")
}

pub fn golden_dir() -> PathBuf {
    corpus_dir().join("golden")
}

/// Every `.vl` program directly under `corpus/`, sorted by name.
pub fn corpus() -> Vec<(String, Program)> {
    let mut paths: Vec<_> = std::fs::read_dir(corpus_dir())
        .expect("corpus directory")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "vl"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|path| {
            let name = path.file_stem().unwrap().to_string_lossy().into_owned();
            let src = std::fs::read_to_string(&path).unwrap();
            let p = parse(&src, &format!("{name}.vl")).unwrap_or_else(|e| panic!("{name}: {e}"));
            (name, p)
        })
        .collect()
}

pub fn load(name: &str) -> Program {
    let src = std::fs::read_to_string(corpus_dir().join(format!("{name}.vl"))).unwrap();
    parse(&src, &format!("{name}.vl")).unwrap()
}

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_vartrace")
}
