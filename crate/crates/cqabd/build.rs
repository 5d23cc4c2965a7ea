fn main() {
    // LAPACK/CBLAS symbols come from the system OpenBLAS build.
    println!("cargo:rustc-link-lib=dylib=openblas");
}
