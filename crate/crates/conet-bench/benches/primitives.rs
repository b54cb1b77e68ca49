use std::net::Ipv4Addr;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

use conet_core::naming::ContentName;
use conet_core::node::{Fib, FlowAction, FlowModOp, Frame, Mac, MatchFields, Switch};
use conet_core::nrs::TagMap;
use conet_core::sim::{ScriptConfig, Sim, SplitMix64, TopologyConfig};
use conet_core::time::SimTime;
use conet_core::wire::{
    decode_header, decode_packet, encode_header, encode_packet, ConetHeader, ConetPacket,
    DecodeHint, DomainTag, PacketFormat,
};

fn sample_packet() -> ConetPacket {
    let name = ContentName::parse("conet.example/file0042").unwrap();
    let header = ConetHeader::data(name, 3, 2, 4, vec![0xA5; 1024]).unwrap();
    let tag = DomainTag::from_short([0, 0, 0, 42]).unwrap();
    ConetPacket::new(
        PacketFormat::F6,
        Ipv4Addr::new(192, 168, 1, 8),
        Ipv4Addr::new(192, 168, 1, 23),
        Some(tag),
        header,
    )
    .unwrap()
}

fn bench_wire(c: &mut Criterion) {
    let packet = sample_packet();
    let header = packet.header().clone();
    let header_bytes = encode_header(&header);
    let packet_bytes = encode_packet(&packet);

    c.bench_function("encode_header_1k", |b| b.iter(|| encode_header(&header)));
    c.bench_function("decode_header_1k", |b| {
        b.iter(|| decode_header(&header_bytes).unwrap())
    });
    c.bench_function("encode_packet_f6", |b| b.iter(|| encode_packet(&packet)));
    c.bench_function("decode_packet_f6", |b| {
        b.iter(|| decode_packet(&packet_bytes, DecodeHint::Format6).unwrap())
    });
}

fn bench_lpm(c: &mut Criterion) {
    let mut rng = SplitMix64(42);
    let mut fib = Fib::new(2048);
    let mut names = Vec::new();
    for i in 0..1000 {
        let name = ContentName::parse(&format!(
            "p{}.example/l{}/l{}",
            rng.below(50),
            rng.below(40),
            i
        ))
        .unwrap();
        fib.install(name.clone(), "next".into(), None, SimTime(i));
        names.push(name);
    }
    let mut i = 0;
    c.bench_function("fib_lookup_1000_entries", |b| {
        b.iter(|| {
            i = (i + 1) % names.len();
            fib.peek(&names[i])
        })
    });
}

fn bench_tags(c: &mut Criterion) {
    let names: Vec<ContentName> = (0..10_000)
        .map(|i| ContentName::parse(&format!("cdn.example/obj{i}")).unwrap())
        .collect();
    c.bench_function("tag_allocate_10k", |b| {
        b.iter_batched(
            TagMap::new,
            |mut tags| {
                for n in &names {
                    tags.allocate(n).unwrap();
                }
            },
            BatchSize::SmallInput,
        )
    });
}

fn bench_switch(c: &mut Criterion) {
    let mut sw = Switch::new("sw".into(), 1..=4, 4096);
    let packet = sample_packet();
    let tag = packet.tag().unwrap();
    for i in 0..512u32 {
        sw.flow_mod(&FlowModOp::Add {
            priority: 100,
            matches: MatchFields {
                nw_proto: Some(17),
                tp_src: Some((i >> 16) as u16),
                tp_dst: Some(i as u16 | 0x8000),
                ..MatchFields::any()
            },
            actions: vec![FlowAction::Output(2)],
            cookie: 1,
        })
        .unwrap();
    }
    sw.flow_mod(&FlowModOp::Add {
        priority: 100,
        matches: MatchFields {
            nw_proto: Some(17),
            tp_src: Some(tag.src_port()),
            tp_dst: Some(tag.dst_port()),
            ..MatchFields::any()
        },
        actions: vec![FlowAction::Output(3)],
        cookie: 1,
    })
    .unwrap();
    let frame = Frame::ipv4(
        Mac([2, 0, 0, 0, 0, 1]),
        Mac([2, 0, 0, 0, 0, 2]),
        encode_packet(&packet),
    );
    c.bench_function("switch_match_512_rules", |b| {
        b.iter(|| sw.process(&frame, 1))
    });
}

fn bench_experiment(c: &mut Criterion) {
    c.bench_function("three_phase_scaled_12s", |b| {
        b.iter_batched(
            || {
                let mut script = ScriptConfig::three_phase();
                script.end_s = 12.0;
                script.phases = vec![
                    conet_core::sim::PhaseCfg {
                        at_s: 0.0,
                        mode: "mac_learning".into(),
                    },
                    conet_core::sim::PhaseCfg {
                        at_s: 4.0,
                        mode: "caching".into(),
                    },
                ];
                script.catalog.files = 16;
                Sim::build(TopologyConfig::testbed(), script).unwrap()
            },
            |mut sim| sim.run(),
            BatchSize::LargeInput,
        )
    });
}

criterion_group!(
    benches,
    bench_wire,
    bench_lpm,
    bench_tags,
    bench_switch,
    bench_experiment
);
criterion_main!(benches);
