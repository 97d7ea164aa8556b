fn main() {
    coherent_sets::cli::main();
}
