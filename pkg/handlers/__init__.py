from .commands import EXIT_CONFIG, EXIT_INTEGRATOR, EXIT_OK, EXIT_SOLVER, EXIT_VERIFY, CommandHandler

__all__ = ["EXIT_CONFIG", "EXIT_INTEGRATOR", "EXIT_OK", "EXIT_SOLVER", "EXIT_VERIFY", "CommandHandler"]
