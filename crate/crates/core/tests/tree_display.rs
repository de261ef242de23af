use omt_core::data::DatasetBuilder;
use omt_core::tree::{build_tree, MTParams};

fn fixture() -> omt_core::data::Dataset {
    let size: Vec<f64> = (1..=24).map(f64::from).collect();
    let lang: Vec<&str> = (0..24).map(|i| ["cobol", "java", "c"][i % 3]).collect();
    let effort: Vec<f64> = size
        .iter()
        .zip(&lang)
        .map(|(&s, &l)| match l {
            "cobol" => 100.0 + 4.0 * s,
            _ if s <= 12.0 => 10.0 + 2.0 * s,
            _ => 30.0 + 0.5 * s,
        })
        .collect();
    DatasetBuilder::new("golden")
        .numeric("size", size)
        .categorical("lang", &lang)
        .target("effort", effort)
        .build()
        .unwrap()
}

#[test]
fn printed_tree() {
    // The cobol rows sit on their own line; the others bend at size 12.
    let params = MTParams {
        min_instances: 3,
        prune: true,
        smoothing: 0.0,
        split_threshold: 0.05,
    };
    let tree = build_tree(&fixture(), params).unwrap();
    let expected = "\
lang in {java, c} (n=24)
|   size <= 10 (n=16)
|   |   LM 1: y = 10 + 2*size (n=6)
|   |   size <= 16 (n=10)
|   |   |   LM 2: y = 16.925 + 1.4*size (n=4)
|   |   |   LM 3: y = 30 + 0.5*size (n=6)
|   LM 4: y = 100 + 4*size (n=8)
";
    assert_eq!(tree.to_string(), expected, "\n{tree}");
}
