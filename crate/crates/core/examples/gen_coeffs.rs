fn main() {
    let (p, lambda) = feigencert::LanfordPolynomial::solve(60).unwrap();
    std::fs::write("crates/core/data/lanford_degree80.txt", p.to_file_string()).unwrap();
    println!("lambda {}", lambda.to_decimal(40));
}
