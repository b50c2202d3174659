# src/utils/logger.py
import logging
import os
from datetime import datetime
from typing import Optional

LOGGER_NAME = 'MCPeakPower'
_DEFAULT_DIR = 'logs'


class AppLogger:
    _instance = None
    _log_dir: Optional[str] = os.environ.get('MCPP_LOG_DIR', _DEFAULT_DIR) or None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super(AppLogger, cls).__new__(cls)
            cls._instance._initialize_logger()
        return cls._instance

    @classmethod
    def configure(cls, log_dir: Optional[str] = _DEFAULT_DIR, console_level: int = logging.INFO):
        """Re-initialize handlers; ``log_dir=None`` keeps console logging only."""
        cls._log_dir = log_dir
        if cls._instance is None:
            cls()
        else:
            cls._instance._initialize_logger()
        cls._instance.console_handler.setLevel(console_level)
        return cls._instance.logger

    def _initialize_logger(self):
        self.logger = logging.getLogger(LOGGER_NAME)
        self.logger.setLevel(logging.DEBUG)
        self.logger.propagate = False

        for handler in list(self.logger.handlers):
            self.logger.removeHandler(handler)
            handler.close()

        # Console handler
        self.console_handler = logging.StreamHandler()
        self.console_handler.setLevel(logging.INFO)
        self.console_handler.setFormatter(logging.Formatter('%(levelname)s: %(message)s'))
        self.logger.addHandler(self.console_handler)

        self.log_file = None
        if self._log_dir:
            os.makedirs(self._log_dir, exist_ok=True)

            # One log file per session
            timestamp = datetime.now().strftime('%Y%m%d_%H%M%S')
            self.log_file = os.path.join(self._log_dir, f'mcpp_{timestamp}.log')

            file_handler = logging.FileHandler(self.log_file, encoding='utf-8')
            file_handler.setLevel(logging.DEBUG)
            file_handler.setFormatter(
                logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s')
            )
            self.logger.addHandler(file_handler)

    @classmethod
    def get_logger(cls):
        if cls._instance is None:
            cls()
        return cls._instance.logger
