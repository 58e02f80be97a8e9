//! Reading and writing the edge-list format, and the errors it reports.

use sfcm::harness::{parse_edge_list, write_edge_list};
use sfcm::oracle::named;

fn main() {
    let text = write_edge_list(&named("bowtie").unwrap());
    print!("{text}");
    assert_eq!(parse_edge_list(&text).unwrap(), named("bowtie").unwrap());

    for bad in ["3 1\n2 2\n", "3 2\n0 1\n1 0\n", "3 1\n0 5\n", "# header missing its m\n3\n", "2 1\n0 one\n"] {
        let e = parse_edge_list(bad).unwrap_err();
        println!("{:<15} {e}", e.code());
    }
}
