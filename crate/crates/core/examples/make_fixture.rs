//! Write a synthetic dataset: `make_fixture <dir> [count] [width] [height] [seed]`.

use roiaug_core::synthetic::write_dataset;
use roiaug_core::BitDepth;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let Some(dir) = args.first() else {
        eprintln!("usage: make_fixture <dir> [count] [width] [height] [seed]");
        std::process::exit(2);
    };
    let num = |i: usize, default: u64| {
        args.get(i)
            .map_or(default, |s| s.parse().expect("integer argument"))
    };
    let m = write_dataset(
        dir,
        num(1, 12) as usize,
        num(2, 512) as u32,
        num(3, 384) as u32,
        BitDepth::Sixteen,
        num(4, 0),
    )
    .expect("write dataset");
    println!("wrote {} samples to {dir}/manifest.csv", m.len());
}
