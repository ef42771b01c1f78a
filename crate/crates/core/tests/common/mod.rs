#![allow(dead_code)]

use std::path::PathBuf;

use vartrace_core::minilang::{parse, Program};

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
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
            let file = format!("{name}.vl");
            let p = parse(&src, &file).unwrap_or_else(|e| panic!("{file}: {e}"));
            (name, p)
        })
        .collect()
}

pub fn load(name: &str) -> Program {
    corpus()
        .into_iter()
        .find(|(n, _)| n == name)
        .unwrap_or_else(|| panic!("no corpus program {name}"))
        .1
}
