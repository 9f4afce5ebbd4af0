// SPDX-FileCopyrightText: © 2026 The galora authors
//
// SPDX-License-Identifier: Apache-2.0

#include "cli/commands.hpp"

int main(int argc, char** argv) { return galora::cli::run_cli(argc, argv); }
