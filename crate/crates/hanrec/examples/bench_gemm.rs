// temp benchmark
use hanrec::tensor::Tensor;
use std::time::Instant;

fn bench<S: hanrec::Scalar>(name: &str, m: usize, k: usize, n: usize, reps: usize) {
    let a = Tensor::<S>::new(vec![m, k], (0..m*k).map(|i| S::from_f64_val((i % 97) as f64 * 0.01)).collect()).unwrap();
    let b = Tensor::<S>::new(vec![k, n], (0..k*n).map(|i| S::from_f64_val((i % 89) as f64 * 0.01)).collect()).unwrap();
    // warmup
    let mut tape = hanrec::tape::Tape::new();
    let an = tape.leaf(a.clone());
    let bn = tape.leaf(b.clone());
    let _ = tape.matmul(an, bn).unwrap();
    let t0 = Instant::now();
    for _ in 0..reps {
        let mut tape = hanrec::tape::Tape::new();
        let an = tape.leaf(a.clone());
        let bn = tape.leaf(b.clone());
        let _ = tape.matmul(an, bn).unwrap();
    }
    let dt = t0.elapsed().as_secs_f64();
    let flops = 2.0 * (m * k * n * reps) as f64;
    println!("{name} {m}x{k}x{n}: {:.1} GFLOP/s ({:.3}s for {reps} reps)", flops / dt / 1e9, dt);
}

fn main() {
    bench::<f32>("f32", 8192, 256, 128, 20);
    bench::<f32>("f32", 8192, 128, 128, 20);
    bench::<f32>("f32", 2048, 512, 128, 20);
    bench::<f64>("f64", 8192, 256, 128, 20);
    bench::<f32>("f32 small", 256, 384, 128, 100);
}
