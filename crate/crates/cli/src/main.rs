// SPDX-License-Identifier: Apache-2.0

fn main() {
    std::process::exit(oen_npu::run(std::env::args_os()));
}
