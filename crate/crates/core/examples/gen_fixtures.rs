//! Regenerates the synthetic fixtures under `fixtures/`.
//!
//! ```text
//! cargo run -p mqm-core --example gen_fixtures -- fixtures
//! ```

use std::fs;
use std::path::PathBuf;

use mqm_core::corpus::{records_to_jsonl, DatasetRecord};
use mqm_core::parser::{serialize_document, AnnotatedBlock};
use mqm_core::synth::annotated_units;

fn main() {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "fixtures".into()));
    fs::create_dir_all(&dir).expect("create fixture dir");

    let all = annotated_units(600, 17);
    fs::write(dir.join("synthetic_1200.jsonl"), records_to_jsonl(&all)).unwrap();

    let first100: Vec<DatasetRecord> = all.iter().take(100).cloned().collect();
    fs::write(dir.join("annotated_100.jsonl"), records_to_jsonl(&first100)).unwrap();
    let blocks: Vec<AnnotatedBlock> = first100.iter().map(|r| AnnotatedBlock::from_unit(&r.unit, r.annotation().unwrap())).collect();
    fs::write(dir.join("annotated_100.mqm"), serialize_document(&blocks).unwrap()).unwrap();

    // 20 mixed units: bare units, some without reference or hypothesis
    let mixed: Vec<DatasetRecord> = all
        .iter()
        .skip(200)
        .take(20)
        .enumerate()
        .map(|(i, r)| {
            let mut u = r.unit.clone();
            if i % 5 == 3 {
                u.hypothesis = None;
            }
            if i % 7 == 6 {
                u.reference = None;
            }
            DatasetRecord::from_unit(u)
        })
        .collect();
    fs::write(dir.join("mixed_20.jsonl"), records_to_jsonl(&mixed)).unwrap();

    let mut tsv = String::from("id\tcorpus\tsource\treference\n");
    for r in all.iter().skip(300).take(10) {
        let u = &r.unit;
        tsv.push_str(&format!("{}\t{}\t{}\t{}\n", u.id, u.corpus, u.source, u.reference.as_deref().unwrap_or("")));
    }
    fs::write(dir.join("parallel_10.tsv"), tsv).unwrap();
    eprintln!("wrote fixtures to {}", dir.display());
}
