fn main() {
    // LAPACK/BLAS backend: link the system OpenBLAS directly.
    println!("cargo:rustc-link-lib=dylib=openblas");
}
