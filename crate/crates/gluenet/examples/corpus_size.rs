fn main() {
    let c = gluenet::corpus::exhaustive_corpus();
    println!("corpus size: {}", c.len());
    let mut linkings = 0usize;
    for text in &c {
        let s = gluenet::logic::parse_sequent(text).unwrap();
        linkings += gluenet::logic::enumerate_linkings(&s, 8).unwrap().linkings.len();
    }
    println!("total (sequent, linking) pairs: {linkings}");
}
