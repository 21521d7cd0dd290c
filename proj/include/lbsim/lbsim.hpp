#ifndef LBSIM_LBSIM_HPP
#define LBSIM_LBSIM_HPP

#include <lbsim/balancer.hpp>
#include <lbsim/commands.hpp>
#include <lbsim/config.hpp>
#include <lbsim/cost.hpp>
#include <lbsim/decomposition.hpp>
#include <lbsim/error.hpp>
#include <lbsim/io.hpp>
#include <lbsim/perfmodel.hpp>
#include <lbsim/scenarios.hpp>
#include <lbsim/workload.hpp>

#endif // LBSIM_LBSIM_HPP
