//! Small synthetic inputs for end-to-end runs.

use std::fs;
use std::path::{Path, PathBuf};

use lipad::datasets::{encode_mnist_idx, LabeledData};
use lipad::Tensor;

/// A small IDX fixture in the MNIST layout.
pub fn fake_mnist(dir: &Path) -> PathBuf {
    let root = dir.join("mnist");
    fs::create_dir_all(&root).unwrap();
    for (split, n) in [("train", 400usize), ("t10k", 200)] {
        let classes: Vec<u8> = (0..n).map(|i| (i % 10) as u8).collect();
        let pixels: Vec<f64> = (0..n * 784)
            .map(|k| {
                let (i, j) = (k / 784, k % 784);
                // each class lights a different band of rows
                let band = (j / 28) / 3 == usize::from(classes[i]) % 9;
                let noise = ((k * 7919 + 13) % 97) as f64 / 97.0;
                if band {
                    ((0.6 + 0.4 * noise) * 255.0).round() / 255.0
                } else {
                    ((0.1 * noise) * 255.0).round() / 255.0
                }
            })
            .collect();
        let data = LabeledData {
            points: Tensor::matrix(n, 784, pixels),
            labels: vec![0; n],
            classes: Some(classes),
        };
        let (img, lab) = encode_mnist_idx(&data, 28, 28).unwrap();
        fs::write(root.join(format!("{split}-images-idx3-ubyte")), img).unwrap();
        fs::write(root.join(format!("{split}-labels-idx1-ubyte")), lab).unwrap();
    }
    root
}
