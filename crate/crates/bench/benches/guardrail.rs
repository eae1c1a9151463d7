use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion, Throughput};
use helpdesk_core::pipeline::{detect_code_blocks, strip_code_blocks};

fn completion(blocks: usize) -> String {
    let mut s = String::new();
    for i in 0..blocks {
        s.push_str("Think about what the loop variable holds on each pass.\n\n");
        s.push_str(if i % 2 == 0 { "```python\n" } else { "~~~\n" });
        for j in 0..12 {
            s.push_str(&format!("value_{j} = items[{j}] * {i}\n"));
        }
        s.push_str(if i % 2 == 0 { "```\n" } else { "~~~\n" });
    }
    s
}

fn bench_fences(c: &mut Criterion) {
    let text = completion(20);
    let mut group = c.benchmark_group("fences");
    group.throughput(Throughput::Bytes(text.len() as u64));
    group.bench_function("detect", |b| b.iter(|| detect_code_blocks(black_box(&text))));
    group.bench_function("strip", |b| b.iter(|| strip_code_blocks(black_box(&text))));
    group.finish();
}

criterion_group!(benches, bench_fences);
criterion_main!(benches);
