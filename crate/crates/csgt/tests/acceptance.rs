//! Acceptance gate for the codec: one test per shipping criterion, run
//! against the full synthetic corpus at bench resolution. The default
//! output gives one pass/fail line per criterion; add `-- --nocapture`
//! to see the measured numbers behind each verdict.

use std::sync::OnceLock;
use std::time::Instant;

use csgt::bench::{self, BenchOptions, Experiment, NamedImage, Scheme};
use csgt::codec::{self, EncoderConfig};
use csgt::gray;
use csgt::huffman::{self, HuffmanTable};
use csgt::image::Image;
use csgt::metrics;
use csgt::quantizer;
use csgt::rng::SeededRng;
use csgt::sensing::MeasurementMatrix;
use csgt::synth;

const BENCH_SIZE: usize = 128;
const SEED: u64 = 1;

fn corpus() -> &'static [NamedImage] {
    static CORPUS: OnceLock<Vec<NamedImage>> = OnceLock::new();
    CORPUS.get_or_init(|| {
        synth::corpus(BENCH_SIZE)
            .into_iter()
            .map(|(name, image)| NamedImage { name, image })
            .collect()
    })
}

fn image(name: &str) -> &'static Image {
    &corpus()
        .iter()
        .find(|n| n.name == name)
        .unwrap_or_else(|| panic!("{name} missing from corpus"))
        .image
}

fn run_bench(corpus: &[NamedImage], experiment: Experiment) -> String {
    let mut out = Vec::new();
    bench::run(corpus, experiment, &BenchOptions::with_seed(SEED), &mut out).unwrap();
    String::from_utf8(out).unwrap()
}

fn bitdepth_csv() -> &'static str {
    static CSV: OnceLock<String> = OnceLock::new();
    CSV.get_or_init(|| run_bench(corpus(), Experiment::BitDepth))
}

fn rd_csv() -> &'static str {
    static CSV: OnceLock<String> = OnceLock::new();
    CSV.get_or_init(|| run_bench(corpus(), Experiment::RateDistortion))
}

struct Row {
    image: String,
    scheme: String,
    sr: f64,
    bit_depth: String,
    bpp: f64,
    psnr: f64,
}

fn parse_rows(csv: &str) -> Vec<Row> {
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(bench::CODEC_CSV_HEADER));
    lines
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            assert_eq!(f.len(), 9, "malformed row: {line}");
            Row {
                image: f[0].to_string(),
                scheme: f[1].to_string(),
                sr: f[2].parse().unwrap(),
                bit_depth: f[3].to_string(),
                bpp: f[4].parse().unwrap(),
                psnr: f[5].parse().unwrap(),
            }
        })
        .collect()
}

fn table_psnr(rows: &[Row], image: &str, scheme: &str, sr: f64, bit_depth: &str) -> f64 {
    rows.iter()
        .find(|r| {
            r.image == image
                && r.scheme == scheme
                && (r.sr - sr).abs() < 1e-6
                && r.bit_depth == bit_depth
        })
        .unwrap_or_else(|| panic!("no row for {image}/{scheme}/sr {sr}/{bit_depth} bits"))
        .psnr
}

fn matched_psnr(rows: &[Row], image: &str, scheme: &str, target_bpp: f64) -> f64 {
    rows.iter()
        .filter(|r| r.image == image && r.scheme == scheme)
        .min_by(|a, b| (a.bpp - target_bpp).abs().total_cmp(&(b.bpp - target_bpp).abs()))
        .unwrap_or_else(|| panic!("no rows for {image}/{scheme}"))
        .psnr
}

#[test]
fn criterion_1_measurement_variance_matches_the_prediction() {
    let start = Instant::now();
    for named in corpus() {
        for sr in [0.1, 0.5] {
            let mut cfg = EncoderConfig {
                sampling_rate: sr,
                bit_depth: None,
                matrix_seed: SEED,
                scramble_seed: SEED + 1,
                gray_transform: true,
                ..EncoderConfig::default()
            };
            let (_, report) = codec::encode(&named.image, &cfg).unwrap();
            let predicted = report.predicted_variance;
            let (mut sum, mut sum_sq, mut count) = (0.0f64, 0.0f64, 0usize);
            for seed in 1..=200 {
                cfg.matrix_seed = seed;
                let samples = codec::sample_image(&named.image, &cfg).unwrap();
                count += samples.len();
                for y in samples {
                    sum += y;
                    sum_sq += y * y;
                }
            }
            let mean = sum / count as f64;
            let empirical = sum_sq / count as f64 - mean * mean;
            println!(
                "criterion 1: {} sr {sr:.1}: empirical {empirical:.2} vs predicted {predicted:.2} ({:+.2}%)",
                named.name,
                100.0 * (empirical / predicted - 1.0)
            );
            assert!(
                (empirical - predicted).abs() <= 0.10 * predicted,
                "{} sr {sr}: empirical {empirical:.2} strays from predicted {predicted:.2}",
                named.name
            );
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    println!("criterion 1: swept 200 matrix seeds per cell in {elapsed:.1} s");
    assert!(elapsed < 120.0, "variance sweep took {elapsed:.0} s");
}

#[test]
fn criterion_2_grid_search_argmin_lands_on_the_image_mean() {
    for named in corpus() {
        let img = &named.image;
        let mut best_value = f64::INFINITY;
        let mut best_a = 0.0f64;
        let mut a = 0.0f64;
        while a <= 255.0 {
            let value: f64 = img.pixels.iter().map(|&p| (p - a) * (p - a)).sum();
            if value < best_value {
                best_value = value;
                best_a = a;
            }
            a += 0.5;
        }
        let mean = img.mean();
        println!("criterion 2: {}: argmin {best_a:.1} vs mean {mean:.4}", named.name);
        assert!(
            (best_a - mean).abs() <= 0.5,
            "{}: grid argmin {best_a} is not at the mean {mean:.4}",
            named.name
        );
        let chosen = gray::optimal_constant(img).value();
        assert!(
            (chosen - mean).abs() <= 1e-3,
            "{}: encoder constant {chosen} disagrees with the mean {mean:.4}",
            named.name
        );
    }
}

#[test]
fn criterion_3_offset_restores_unshifted_measurements_exactly() {
    for named in corpus() {
        let shifted_cfg = EncoderConfig {
            sampling_rate: 0.5,
            bit_depth: None,
            matrix_seed: SEED,
            scramble_seed: SEED + 1,
            gray_transform: true,
            ..EncoderConfig::default()
        };
        let plain_cfg = EncoderConfig { gray_transform: false, ..shifted_cfg };
        let shifted = codec::sample_image(&named.image, &shifted_cfg).unwrap();
        let plain = codec::sample_image(&named.image, &plain_cfg).unwrap();
        let m = shifted_cfg.measurements_per_block() as usize;
        let n = (shifted_cfg.block_size as usize).pow(2);
        let phi = MeasurementMatrix::generate(shifted_cfg.matrix_seed, m, n).unwrap();
        let offset = gray::measurement_offset(&phi, gray::optimal_constant(&named.image));
        let mut worst = 0.0f64;
        for (shifted_block, plain_block) in shifted.chunks(m).zip(plain.chunks(m)) {
            let restored = gray::inverse_transform(shifted_block, &offset).unwrap();
            let err = restored
                .iter()
                .zip(plain_block)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let norm = plain_block.iter().map(|v| v * v).sum::<f64>().sqrt();
            worst = worst.max(err / norm);
        }
        println!("criterion 3: {}: worst relative block error {worst:.3e}", named.name);
        assert!(worst <= 1e-10, "{}: offset restoration off by {worst:.3e}", named.name);
    }
}

#[test]
fn criterion_4_randomized_huffman_roundtrips_are_bit_exact() {
    let mut rng = SeededRng::new(0xACCE);
    for trial in 0..10_000u32 {
        let bit_depth = 2 + rng.next_index(9) as u8;
        let symbols = 1usize << bit_depth;
        let len = 1 + rng.next_index(300);
        let mode = rng.next_index(symbols);
        let spread = 1 + rng.next_index(symbols);
        let indices: Vec<u16> = (0..len)
            .map(|_| ((mode + rng.next_index(spread)) % symbols) as u16)
            .collect();
        let mut counts = vec![0u64; symbols];
        for &i in &indices {
            counts[i as usize] += 1;
        }
        let table = HuffmanTable::build(&counts).unwrap();
        let transmitted = HuffmanTable::from_lengths(table.lengths().to_vec()).unwrap();
        let (payload, bits) = huffman::encode_indices(&indices, &table).unwrap();
        let decoded = huffman::decode_indices(&payload, bits, &transmitted, indices.len()).unwrap();
        assert_eq!(decoded, indices, "trial {trial} corrupted the stream");
    }
    println!("criterion 4: 10000 randomized roundtrips decoded bit-exact");
}

#[test]
fn criterion_5_bit_depth_table_reproduces_the_reference_orderings() {
    let rows = parse_rows(bitdepth_csv());
    assert_eq!(rows.len(), corpus().len() * 5 * 4 * 2);

    let anchor = table_psnr(&rows, "ridge", "sbcs-gt", 0.5, "lossless");
    println!("criterion 5a: ridge lossless at sr 0.5: {anchor:.2} dB (floor 33)");
    assert!(anchor >= 33.0, "lossless anchor {anchor:.2} dB under the 33 dB floor");

    for named in corpus() {
        for sr in [0.3, 0.4, 0.5] {
            let gain = table_psnr(&rows, &named.name, "sbcs-gt", sr, "6")
                - table_psnr(&rows, &named.name, "sbcs", sr, "6");
            println!("criterion 5b: {} sr {sr:.1}: 6-bit gray-transform gain {gain:+.2} dB", named.name);
            assert!(gain >= 1.0, "{} sr {sr}: gain {gain:.2} dB under +1.0", named.name);
        }
    }

    for name in ["ridge", "craters"] {
        for sr in bench::BITDEPTH_SAMPLING_RATES {
            let gap = table_psnr(&rows, name, "sbcs-gt", sr, "lossless")
                - table_psnr(&rows, name, "sbcs-gt", sr, "6");
            println!("criterion 5c: {name} sr {sr:.1}: 6-bit gap to lossless {gap:.2} dB");
            assert!(gap <= 1.5, "{name} sr {sr}: 6 bits trail lossless by {gap:.2} dB");
        }
    }
}

#[test]
fn criterion_6_matched_rate_comparison_favors_the_gray_transform() {
    let rows = parse_rows(rd_csv());
    assert_eq!(rows.len(), corpus().len() * bench::RD_BPP_TARGETS.len() * 2);

    for row in &rows {
        let target = bench::RD_BPP_TARGETS
            .iter()
            .copied()
            .min_by(|a, b| (row.bpp - a).abs().total_cmp(&(row.bpp - b).abs()))
            .unwrap();
        assert!(
            (row.bpp - target).abs() <= bench::RD_RELATIVE_TOLERANCE * target,
            "{}/{}: {:.4} bpp misses the {target} target",
            row.image,
            row.scheme,
            row.bpp
        );
    }

    for target in [0.4, 0.6, 0.8, 1.0] {
        let gaps: Vec<f64> = corpus()
            .iter()
            .map(|named| {
                matched_psnr(&rows, &named.name, "sbcs-gt", target)
                    - matched_psnr(&rows, &named.name, "sbcs", target)
            })
            .collect();
        let average = gaps.iter().sum::<f64>() / gaps.len() as f64;
        println!("criterion 6: {target:.1} bpp: average gray-transform gain {average:+.2} dB");
        assert!(average >= 0.3, "{target} bpp: average gain {average:.2} dB under +0.3");
    }
}

#[test]
fn criterion_7_quantizer_distortion_tracks_the_model() {
    let cfg = EncoderConfig {
        sampling_rate: 0.5,
        bit_depth: None,
        matrix_seed: SEED,
        scramble_seed: SEED + 1,
        gray_transform: true,
        ..EncoderConfig::default()
    };
    let samples = codec::sample_image(image("ridge"), &cfg).unwrap();
    let variance = metrics::sample_variance(&samples);
    let mut rms = Vec::new();
    let mut ratio_at_8 = f64::NAN;
    for bit_depth in [6u8, 7, 8] {
        let qcfg = quantizer::fit_range(bit_depth, &samples).unwrap();
        let block = quantizer::quantize(&samples, &qcfg).unwrap();
        let back = quantizer::dequantize(&block).unwrap();
        let mse = samples
            .iter()
            .zip(&back)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / samples.len() as f64;
        let mut counts = vec![0u64; 1 << bit_depth];
        for &i in &block.indices {
            counts[i as usize] += 1;
        }
        let rate = HuffmanTable::build(&counts).unwrap().average_length(&counts);
        let at_rate = mse / quantizer::predicted_distortion(variance, rate);
        let at_width = mse / quantizer::predicted_distortion(variance, f64::from(bit_depth));
        println!(
            "criterion 7: b={bit_depth}: mse {mse:.4}, {at_rate:.2}x the model at the \
             {rate:.2}-bit transmitted rate ({at_width:.2}x at the nominal index width)"
        );
        rms.push(mse.sqrt());
        if bit_depth == 8 {
            ratio_at_8 = at_rate;
        }
    }
    // The model's rate argument is the coding rate of the quantized
    // samples, which the min/max range fit leaves about a bit below the
    // index width; the factor-3 window absorbs the entropy-coded
    // quantizer's pi*e/6 constant, not a 2-bit rate shortfall.
    assert!(
        (1.0 / 3.0..=3.0).contains(&ratio_at_8),
        "8-bit distortion is {ratio_at_8:.2}x the model"
    );
    for pair in rms.windows(2) {
        let halving = pair[0] / pair[1];
        println!("criterion 7: rms shrink per added bit: {halving:.3}x");
        assert!(
            (1.8..=2.2).contains(&halving),
            "rms shrink {halving:.3}x per bit outside [1.8, 2.2]"
        );
    }
}

#[test]
fn criterion_8_measured_bpp_matches_the_rate_model_on_every_cell() {
    let mut cells = 0usize;
    let mut worst = 0.0f64;
    for named in corpus() {
        for sr in bench::BITDEPTH_SAMPLING_RATES {
            for bit_depth in bench::BITDEPTH_SETTINGS {
                for scheme in Scheme::BOTH {
                    let cfg = EncoderConfig {
                        sampling_rate: sr,
                        bit_depth,
                        matrix_seed: SEED,
                        scramble_seed: SEED + 1,
                        gray_transform: scheme.uses_gray_transform(),
                        ..EncoderConfig::default()
                    };
                    let (_, report) = codec::encode(&named.image, &cfg).unwrap();
                    let rate = &report.rate;
                    let deviation = (rate.bpp - rate.predicted_bpp).abs() / rate.predicted_bpp;
                    worst = worst.max(deviation);
                    cells += 1;
                    assert!(
                        deviation <= 0.10,
                        "{} sr {sr} bits {bit_depth:?} {}: measured {:.4} bpp vs predicted {:.4}",
                        named.name,
                        scheme.label(),
                        rate.bpp,
                        rate.predicted_bpp
                    );
                }
            }
        }
    }
    println!("criterion 8: worst bpp deviation {:.2}% across {cells} cells", 100.0 * worst);
}

#[test]
fn criterion_9_bench_reruns_are_byte_identical() {
    let rerun = run_bench(corpus(), Experiment::RateDistortion);
    assert_eq!(rd_csv(), rerun, "rate-distortion reruns diverged");
    println!("criterion 9: rate-distortion rerun identical ({} bytes)", rerun.len());

    let small: Vec<NamedImage> = synth::corpus(64)
        .into_iter()
        .take(1)
        .map(|(name, image)| NamedImage { name, image })
        .collect();
    let first = run_bench(&small, Experiment::BitDepth);
    let second = run_bench(&small, Experiment::BitDepth);
    assert_eq!(first, second, "bit-depth reruns diverged");
    println!("criterion 9: bit-depth rerun identical ({} bytes)", first.len());
}
