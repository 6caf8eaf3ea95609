#pragma once

#include <cdcert/audit.hpp>
#include <cdcert/diagnostics.hpp>
#include <cdcert/error.hpp>
#include <cdcert/io.hpp>
#include <cdcert/penalty.hpp>
#include <cdcert/problem.hpp>
#include <cdcert/solver.hpp>
#include <cdcert/synthetic.hpp>
