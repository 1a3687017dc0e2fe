#pragma once

#include "alarmrca/alarm_model.hpp"
#include "alarmrca/ci.hpp"
#include "alarmrca/config.hpp"
#include "alarmrca/cpbe.hpp"
#include "alarmrca/error.hpp"
#include "alarmrca/experiments.hpp"
#include "alarmrca/graph.hpp"
#include "alarmrca/hawkes.hpp"
#include "alarmrca/hpci.hpp"
#include "alarmrca/influence.hpp"
#include "alarmrca/io.hpp"
#include "alarmrca/metrics.hpp"
#include "alarmrca/stats.hpp"
#include "alarmrca/synth.hpp"
