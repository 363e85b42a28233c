#pragma once

#include <acs/average_fill.hpp>
#include <acs/benchgen.hpp>
#include <acs/error.hpp>
#include <acs/experiment.hpp>
#include <acs/fps.hpp>
#include <acs/io.hpp>
#include <acs/nlp.hpp>
#include <acs/power.hpp>
#include <acs/simulator.hpp>
#include <acs/solver.hpp>
#include <acs/taskmodel.hpp>
#include <acs/verify.hpp>
