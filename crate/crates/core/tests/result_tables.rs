use wfc_core::stats::{
    friedman, matrix_from_csv, rank_rows, ranks_from_csv, summarize, summarize_with_ranks, Direction,
};
use wfc_core::{RankMatrix, ResultMatrix};

const CHI2_TOLERANCE: f64 = 1.0;
const FOOTER_TOLERANCE: f64 = 0.05;

fn values(table: u8) -> ResultMatrix {
    let text = std::fs::read_to_string(format!("{}/../../fixtures/result-tables/table{table}_values.csv", env!("CARGO_MANIFEST_DIR"))).unwrap();
    matrix_from_csv(&text, Direction::HigherBetter).unwrap()
}

fn ranks(table: u8) -> RankMatrix {
    let text = std::fs::read_to_string(format!("{}/../../fixtures/result-tables/table{table}_ranks.csv", env!("CARGO_MANIFEST_DIR"))).unwrap();
    ranks_from_csv(&text).unwrap()
}

#[test]
fn friedman_statistics_match_printed_values() {
    for (table, printed, rows, cols) in [(4, 90.170, 36, 6), (5, 35.344, 36, 6), (6, 121.150, 36, 7)] {
        let r = ranks(table);
        assert_eq!((r.rows().len(), r.cols().len()), (rows, cols));
        let result = friedman(&r).unwrap();
        assert!((result.chi2 - printed).abs() <= CHI2_TOLERANCE, "table {table}: {}", result.chi2);
        assert!(result.p < 0.001);
        assert_eq!(result.df, cols - 1);
    }
}

#[test]
fn printed_ranks_follow_from_printed_values() {
    for table in [4, 5, 6] {
        let computed = rank_rows(&values(table));
        let printed = ranks(table);
        let mut agree = 0;
        for (a, b) in computed.ranks().iter().zip(printed.ranks()) {
            if a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-9) {
                agree += 1;
            }
        }
        // a few printed rows were ranked on unrounded data
        assert!(agree * 10 >= printed.rows().len() * 8, "table {table}: {agree} rows agree");
    }
    let computed = rank_rows(&values(4));
    let printed = ranks(4);
    for sut in ["bibliothek", "pay-publicapi", "rest-scs"] {
        assert_eq!(computed.row(sut).unwrap(), printed.row(sut).unwrap(), "{sut}");
    }
}

#[test]
fn table6_footer() {
    let summary = summarize(&values(6));
    let col = |name: &str| summary.iter().find(|c| c.label == name).unwrap();
    for (tool, mean, median) in [("EvoMaster", 45.5, 46.5), ("Schemathesis", 25.9, 23.1)] {
        assert!((col(tool).mean - mean).abs() <= FOOTER_TOLERANCE, "{tool} mean {}", col(tool).mean);
        assert!((col(tool).median - median).abs() <= FOOTER_TOLERANCE, "{tool} median {}", col(tool).median);
    }
}

#[test]
fn table4_mean_rank() {
    let m = values(4);
    let summary = summarize_with_ranks(&m, &ranks(4));
    let evo = summary.iter().find(|c| c.label == "EvoMaster").unwrap();
    assert!((evo.mean_rank - 1.4).abs() <= FOOTER_TOLERANCE, "{}", evo.mean_rank);
}
