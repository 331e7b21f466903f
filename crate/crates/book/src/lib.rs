//! Each chapter of the guide in `book/src` is included here so that its
//! Rust snippets run as doc-tests.

macro_rules! chapter {
    ($name:ident, $file:literal) => {
        #[doc = include_str!(concat!("../../../book/src/", $file))]
        pub mod $name {}
    };
}

chapter!(introduction, "introduction.md");
chapter!(correlation, "correlation.md");
chapter!(kriging, "kriging.md");
chapter!(auto_estimation, "auto_estimation.md");
chapter!(mean, "mean.md");
chapter!(white_noise, "white_noise.md");
chapter!(monte_carlo, "monte_carlo.md");
chapter!(cli, "cli.md");
