use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use softsnake::config::GaitFile;
use softsnake::gait::{generate_curve_set, GaitSpec};
use softsnake::ik::{solve_frame, solve_period, IkProblem, IkSettings};
use softsnake::kinematics::RobotConfig;
use softsnake::parallel::{map_indexed, Execution};
use softsnake::pipeline::{ceiling_amplitude, schedule_for};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn settings(exec: Execution) -> IkSettings {
    IkSettings {
        execution: exec,
        ..IkSettings::default()
    }
}

fn curve_generation(c: &mut Criterion) {
    let robot = RobotConfig::default();
    let spec = GaitSpec::default();
    let mut g = c.benchmark_group("curve_set");
    for (name, exec) in MODES {
        g.bench_function(name, |b| b.iter(|| generate_curve_set(black_box(&spec), &robot, exec).unwrap()));
    }
    g.finish();
}

fn multi_start(c: &mut Criterion) {
    let robot = RobotConfig::default();
    let set = generate_curve_set(&GaitSpec::default(), &robot, Execution::Parallel).unwrap();
    let problem = IkProblem::from_curve(&set.curves[0], robot, set.samples_per_section, 1.0).unwrap();
    let mut g = c.benchmark_group("solve_frame");
    for starts in [8, 32] {
        for (name, exec) in MODES {
            let s = IkSettings {
                starts,
                ..settings(exec)
            };
            g.bench_with_input(BenchmarkId::new(name, starts), &s, |b, s| {
                b.iter(|| solve_frame(black_box(&problem), None, s).unwrap())
            });
        }
    }
    g.finish();
}

fn period(c: &mut Criterion) {
    let robot = RobotConfig::default();
    let set = generate_curve_set(&GaitSpec::default(), &robot, Execution::Parallel).unwrap();
    let mut g = c.benchmark_group("solve_period");
    g.sample_size(10);
    for (name, exec) in MODES {
        let s = settings(exec);
        g.bench_function(name, |b| b.iter(|| solve_period(black_box(&set), &robot, &s).unwrap()));
    }
    g.finish();
}

fn sweep_grid(c: &mut Criterion) {
    let robot = RobotConfig::default();
    let file = GaitFile::default();
    let set = generate_curve_set(&file.gait, &robot, Execution::Parallel).unwrap();
    let traj = solve_period(&set, &robot, &file.ik).unwrap();
    let grid: Vec<(f64, f64)> = file
        .sweep
        .ceilings
        .values()
        .unwrap()
        .into_iter()
        .flat_map(|c| file.sweep.frequencies.values().unwrap().into_iter().map(move |f| (c, f)))
        .collect();
    let mut g = c.benchmark_group("sweep_schedules");
    for (name, exec) in MODES {
        g.bench_function(name, |b| {
            b.iter(|| {
                map_indexed(grid.len(), exec, |i| {
                    let (ceiling, f) = grid[i];
                    let map = softsnake::actuation::PressureMap { ceiling, ..file.pressure };
                    schedule_for(&traj, &map, &file.schedule, ceiling_amplitude(&file, ceiling), Some(f)).unwrap()
                })
            })
        });
    }
    g.finish();
}

criterion_group!(benches, curve_generation, multi_start, period, sweep_grid);
criterion_main!(benches);
