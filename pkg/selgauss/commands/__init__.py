"""
Experiment verbs and their registration
"""
from experiment_framework.command_registry import register_command
from selgauss.commands.casestudy import CaseStudyCommand
from selgauss.commands.fit import FitCommand
from selgauss.commands.invert import InvertCommand
from selgauss.commands.replicate_study import ReplicateStudyCommand
from selgauss.commands.simulate_prior import SimulatePriorCommand

COMMANDS = {
    "simulate-prior": SimulatePriorCommand,
    "invert": InvertCommand,
    "fit": FitCommand,
    "replicate-study": ReplicateStudyCommand,
    "casestudy": CaseStudyCommand,
}


def register_all() -> None:
    for name, command_class in COMMANDS.items():
        register_command(name, command_class)
